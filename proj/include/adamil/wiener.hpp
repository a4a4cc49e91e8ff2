#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "adamil/linalg.hpp"

namespace adamil {

/**
 * One Monte Carlo realisation of an m-dimensional Wiener process on the fine grid
 * t_k = k * h_ref, h_ref = T * 2^-L.
 *
 * Increments are stored as integer multiples of a dyadic quantum q (a power of two
 * close to sqrt(T) * 2^-20). Every window sum, product of two window increments and
 * accumulated Lévy area is then an exact integer before conversion, so the iterated
 * integral identities and increment additivity hold bit for bit, and coarse and
 * reference solutions see exactly the same noise. The quantum is at least 2^6 times
 * smaller than the fine standard deviation for every supported resolution.
 *
 * Memory: m * (2^L + 1) * 8 bytes.
 */
class WienerPath {
public:
    static constexpr int kMaxResolutionExponent = 28;

    // Deterministic in seed; each (seed, component) pair drives its own generator stream.
    static WienerPath generate(std::uint64_t seed, int resolution_exponent, int dim_noise, double horizon);

    // Inserts `extra_levels` rounds of Brownian-bridge midpoints conditioned on the
    // existing increments. Sums over every window of the original grid are unchanged.
    WienerPath refine(int extra_levels) const;

    int dim_noise() const { return dim_noise_; }
    int resolution_exponent() const { return resolution_exponent_; }
    std::int64_t num_steps() const { return num_steps_; }
    double resolution() const { return resolution_; }
    double horizon() const { return horizon_; }
    std::uint64_t seed() const { return seed_; }
    double quantum() const { return quantum_; }

    // W_i(t_k) - W_i(0) in quanta and as a real number.
    std::int64_t count_at(int component, std::int64_t k) const {
        return cumulative_[static_cast<std::size_t>(component) * stride() + static_cast<std::size_t>(k)];
    }
    double value(int component, std::int64_t k) const { return static_cast<double>(count_at(component, k)) * quantum_; }
    // Fine increment W_i(t_{k+1}) - W_i(t_k).
    double increment(int component, std::int64_t k) const {
        return static_cast<double>(count_at(component, k + 1) - count_at(component, k)) * quantum_;
    }

    // Debug dump: "AMWP" magic, version, m, L, T, seed, then little-endian doubles,
    // increments component-major.
    void write_binary(std::ostream& out) const;
    static WienerPath read_binary(std::istream& in);

private:
    WienerPath(std::uint64_t seed, int resolution_exponent, int dim_noise, double horizon);
    std::size_t stride() const { return static_cast<std::size_t>(num_steps_) + 1; }

    std::uint64_t seed_;
    int resolution_exponent_;
    int dim_noise_;
    double horizon_;
    std::int64_t num_steps_;
    double resolution_;
    double quantum_;
    std::vector<std::int64_t> cumulative_;
};

// Wiener integrals over one coarse step [t_a, t_b].
//   I(j, i) = int int dW_j(p) dW_i(r)   (inner index j, outer index i)
//   A(i, j) = (I(i, j) - I(j, i)) / 2
struct IteratedIntegrals {
    double h = 0.0;
    Vec dW;
    Mat I;
    Mat A;

    // Same step with the Lévy area set to zero: I keeps its diagonal and symmetric part.
    IteratedIntegrals without_levy_area() const;
};

// Integrals over fine-grid window [start_index, end_index]. Throws UsageError when
// the window is empty or outside the path.
IteratedIntegrals integrals_over(const WienerPath& path, std::int64_t start_index, std::int64_t end_index);

// Moment constants of the Lévy area of a unit-length step: E[A^b] = I_b h^b and
// E[|A|^b] <= Ihat_b h^b.
struct LevyMoment {
    int order = 0;
    boost::multiprecision::cpp_rational exact;  // I_b
    double value = 0.0;                          // I_b as double
    double abs_bound = 0.0;                      // Ihat_b
};

inline constexpr int kMaxMomentOrder = 32;

// E_n, the Taylor coefficients of sech: sech(x) = sum_n E_n x^n / n!. Zero for odd n.
boost::multiprecision::cpp_int euler_number(int n);

// Throws UsageError for b outside [1, kMaxMomentOrder].
LevyMoment moment_constant(int b);

}  // namespace adamil
