#include "adamil/wiener.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "adamil/errors.hpp"

namespace adamil {

namespace {

// Upper bound on the increment storage of a single path.
constexpr std::uint64_t kMaxPathBytes = std::uint64_t{4} << 30;

constexpr std::uint32_t kBridgeStream = 0xB81D6E;

// Power of two closest to sqrt(T) * 2^-20 from below.
double quantum_for(double horizon) {
    const int e = static_cast<int>(std::floor(std::log2(std::sqrt(horizon))));
    return std::ldexp(1.0, e - 20);
}

std::mt19937_64 stream_for(std::uint64_t seed, std::uint32_t component, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), component, tag};
    return std::mt19937_64(seq);
}

template <class T>
void put(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw UsageError("truncated Wiener path dump");
    }
    return value;
}

}  // namespace

WienerPath::WienerPath(std::uint64_t seed, int resolution_exponent, int dim_noise, double horizon)
    : seed_(seed), resolution_exponent_(resolution_exponent), dim_noise_(dim_noise), horizon_(horizon) {
    if (resolution_exponent < 1) {
        throw UsageError("resolution exponent must be >= 1");
    }
    if (dim_noise < 1 || dim_noise > kMaxDim) {
        throw UsageError("noise dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw UsageError("horizon must be positive and finite");
    }
    if (resolution_exponent > kMaxResolutionExponent) {
        throw ResourceError("resolution exponent " + std::to_string(resolution_exponent) + " exceeds the supported " +
                            std::to_string(kMaxResolutionExponent) + "; use a coarser fine grid");
    }
    num_steps_ = std::int64_t{1} << resolution_exponent;
    const std::uint64_t bytes =
        static_cast<std::uint64_t>(dim_noise) * (static_cast<std::uint64_t>(num_steps_) + 1) * sizeof(std::int64_t);
    if (bytes > kMaxPathBytes) {
        throw ResourceError("Wiener path would need " + std::to_string(bytes >> 20) +
                            " MiB; reduce the resolution exponent or the noise dimension");
    }
    resolution_ = std::ldexp(horizon, -resolution_exponent);
    quantum_ = quantum_for(horizon);
    cumulative_.assign(static_cast<std::size_t>(dim_noise) * stride(), 0);
}

WienerPath WienerPath::generate(std::uint64_t seed, int resolution_exponent, int dim_noise, double horizon) {
    WienerPath path(seed, resolution_exponent, dim_noise, horizon);
    const double scale = std::sqrt(path.resolution_) / path.quantum_;
    std::normal_distribution<double> normal;
    for (int i = 0; i < dim_noise; ++i) {
        auto rng = stream_for(seed, static_cast<std::uint32_t>(i), 0);
        std::int64_t* w = path.cumulative_.data() + static_cast<std::size_t>(i) * path.stride();
        std::int64_t acc = 0;
        w[0] = 0;
        for (std::int64_t k = 0; k < path.num_steps_; ++k) {
            acc += std::llround(scale * normal(rng));
            w[k + 1] = acc;
        }
    }
    return path;
}

WienerPath WienerPath::refine(int extra_levels) const {
    if (extra_levels < 0) {
        throw UsageError("refinement levels must be non-negative");
    }
    WienerPath fine(seed_, resolution_exponent_ + extra_levels, dim_noise_, horizon_);
    const std::int64_t factor = std::int64_t{1} << extra_levels;
    std::normal_distribution<double> normal;
    for (int i = 0; i < dim_noise_; ++i) {
        auto rng = stream_for(seed_, static_cast<std::uint32_t>(i), kBridgeStream + static_cast<std::uint32_t>(extra_levels));
        std::int64_t* w = fine.cumulative_.data() + static_cast<std::size_t>(i) * fine.stride();
        for (std::int64_t k = 0; k <= num_steps_; ++k) {
            w[k * factor] = count_at(i, k);
        }
        // Level by level: split each interval of length h at its midpoint.
        // Given the interval increment D, the left half is N(D/2, h/4).
        for (std::int64_t span = factor; span > 1; span /= 2) {
            const double h = resolution_ * static_cast<double>(span) / static_cast<double>(factor);
            const double half_sd = 0.5 * std::sqrt(h) / quantum_;
            for (std::int64_t a = 0; a < fine.num_steps_; a += span) {
                const std::int64_t total = w[a + span] - w[a];
                const std::int64_t left =
                    std::llround(0.5 * static_cast<double>(total) + half_sd * normal(rng));
                w[a + span / 2] = w[a] + left;
            }
        }
    }
    return fine;
}

void WienerPath::write_binary(std::ostream& out) const {
    out.write("AMWP", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_noise_));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(resolution_exponent_));
    put<double>(out, horizon_);
    put<std::uint64_t>(out, seed_);
    for (int i = 0; i < dim_noise_; ++i) {
        for (std::int64_t k = 0; k < num_steps_; ++k) {
            put<double>(out, increment(i, k));
        }
    }
}

WienerPath WienerPath::read_binary(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || std::memcmp(magic.data(), "AMWP", 4) != 0) {
        throw UsageError("not a Wiener path dump");
    }
    if (get<std::uint32_t>(in) != 1) {
        throw UsageError("unsupported Wiener path dump version");
    }
    const auto m = static_cast<int>(get<std::uint32_t>(in));
    const auto level = static_cast<int>(get<std::uint32_t>(in));
    const auto horizon = get<double>(in);
    const auto seed = get<std::uint64_t>(in);
    WienerPath path(seed, level, m, horizon);
    for (int i = 0; i < m; ++i) {
        std::int64_t* w = path.cumulative_.data() + static_cast<std::size_t>(i) * path.stride();
        for (std::int64_t k = 0; k < path.num_steps_; ++k) {
            w[k + 1] = w[k] + std::llround(get<double>(in) / path.quantum_);
        }
    }
    return path;
}

IteratedIntegrals IteratedIntegrals::without_levy_area() const {
    IteratedIntegrals out = *this;
    const int m = static_cast<int>(dW.size());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j) {
                out.I(i, j) = 0.5 * (dW[i] * dW[j]);
            }
        }
    }
    out.A.setZero();
    return out;
}

IteratedIntegrals integrals_over(const WienerPath& path, std::int64_t start_index, std::int64_t end_index) {
    if (start_index < 0 || end_index > path.num_steps() || start_index >= end_index) {
        throw UsageError("window [" + std::to_string(start_index) + ", " + std::to_string(end_index) +
                         ") outside path of " + std::to_string(path.num_steps()) + " steps");
    }
    const int m = path.dim_noise();
    const double q = path.quantum();

    IteratedIntegrals out;
    out.h = static_cast<double>(end_index - start_index) * path.resolution();
    out.dW.resize(m);
    out.I.resize(m, m);
    out.A.setZero(m, m);

    std::array<std::int64_t, kMaxDim> total{};
    for (int i = 0; i < m; ++i) {
        total[static_cast<std::size_t>(i)] = path.count_at(i, end_index) - path.count_at(i, start_index);
        out.dW[i] = static_cast<double>(total[static_cast<std::size_t>(i)]) * q;
    }
    for (int i = 0; i < m; ++i) {
        out.I(i, i) = 0.5 * (out.dW[i] * out.dW[i] - out.h);
    }
    if (m == 1) {
        return out;
    }

    // twice_area(i, j) = sum_k (W_i dW_j - W_j dW_i) over the window, left point,
    // W measured from the window start, all in units of q^2.
    const double half_q2 = 0.5 * q * q;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            std::int64_t twice_area = 0;
            const std::int64_t wi0 = path.count_at(i, start_index);
            const std::int64_t wj0 = path.count_at(j, start_index);
            std::int64_t wi_prev = 0;
            std::int64_t wj_prev = 0;
            for (std::int64_t k = start_index + 1; k <= end_index; ++k) {
                const std::int64_t wi = path.count_at(i, k) - wi0;
                const std::int64_t wj = path.count_at(j, k) - wj0;
                twice_area += wi_prev * (wj - wj_prev) - wj_prev * (wi - wi_prev);
                wi_prev = wi;
                wj_prev = wj;
            }
            const std::int64_t product = total[static_cast<std::size_t>(i)] * total[static_cast<std::size_t>(j)];
            // A = twice_area * q^2 / 2 and I = (product +- twice_area) * q^2 / 2, all exact integers scaled.
            out.A(i, j) = static_cast<double>(twice_area) * half_q2;
            out.A(j, i) = -out.A(i, j);
            out.I(i, j) = static_cast<double>(product + twice_area) * half_q2;
            out.I(j, i) = static_cast<double>(product - twice_area) * half_q2;
        }
    }
    return out;
}

}  // namespace adamil
