#include "adamil/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <utility>

#include "adamil/errors.hpp"

namespace adamil {

std::string_view to_string(NoiseStructure s) {
    switch (s) {
        case NoiseStructure::additive: return "additive";
        case NoiseStructure::diagonal: return "diagonal";
        case NoiseStructure::commutative: return "commutative";
        case NoiseStructure::general: return "general";
    }
    return "unknown";
}

SdeProblem::SdeProblem(std::string name, int dim_state, int dim_noise, DriftFn drift, ColumnFn diffusion_column,
                       JacobianFn diffusion_jacobian, NoiseStructure structure, Vec initial_state, double horizon,
                       DriftJacobianFn drift_jacobian)
    : name_(std::move(name)),
      dim_state_(dim_state),
      dim_noise_(dim_noise),
      drift_(std::move(drift)),
      column_(std::move(diffusion_column)),
      jacobian_(std::move(diffusion_jacobian)),
      structure_(structure),
      initial_state_(std::move(initial_state)),
      horizon_(horizon),
      drift_jacobian_(std::move(drift_jacobian)) {
    if (dim_state < 1 || dim_state > kMaxDim || dim_noise < 1 || dim_noise > kMaxDim) {
        throw ConfigError("problem dimensions must lie in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (!drift_ || !column_ || !jacobian_) {
        throw ConfigError("problem '" + name_ + "' is missing a coefficient function");
    }
    if (initial_state_.size() != dim_state) {
        throw ConfigError("initial state has wrong dimension");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("horizon must be positive and finite");
    }
}

Mat SdeProblem::diffusion_matrix(const Vec& x) const {
    Mat g(dim_state_, dim_noise_);
    for (int i = 0; i < dim_noise_; ++i) {
        g.col(i) = column_(x, i);
    }
    return g;
}

Mat SdeProblem::drift_jacobian(const Vec& x) const {
    if (drift_jacobian_) {
        return drift_jacobian_(x);
    }
    Mat jac(dim_state_, dim_state_);
    for (int k = 0; k < dim_state_; ++k) {
        const double step = 1e-6 * std::max(1.0, std::abs(x[k]));
        Vec up = x;
        Vec down = x;
        up[k] += step;
        down[k] -= step;
        jac.col(k) = (drift_(up) - drift_(down)) / (2.0 * step);
    }
    return jac;
}

namespace {

constexpr std::array<std::pair<BuiltinProblem, std::string_view>, 6> kBuiltinNames{{
    {BuiltinProblem::scalar_mult, "scalar_mult"},
    {BuiltinProblem::scalar_add, "scalar_add"},
    {BuiltinProblem::scalar_probe, "scalar_probe"},
    {BuiltinProblem::twod_diagonal, "twod_diagonal"},
    {BuiltinProblem::twod_commutative, "twod_commutative"},
    {BuiltinProblem::twod_noncommutative, "twod_noncommutative"},
}};

Vec vec1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat mat1(double a) {
    Mat m(1, 1);
    m(0, 0) = a;
    return m;
}

Mat mat2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

// dX = (X - X^3) dt + G(X) dW, X(0) = 2, T = 1.
SdeProblem scalar_problem(std::string name, SdeProblem::ColumnFn g, SdeProblem::JacobianFn dg,
                          NoiseStructure structure) {
    return SdeProblem(
        std::move(name), 1, 1, [](const Vec& x) { return vec1(x[0] - x[0] * x[0] * x[0]); }, std::move(g),
        std::move(dg), structure, vec1(2.0), 1.0,
        [](const Vec& x) { return mat1(1.0 - 3.0 * x[0] * x[0]); });
}

// dX = F(X) dt + G(X) dW with F(x) = [x1 - 3 x1^3, x2 - 3 x2^3], X(0) = [2, 3], T = 1.
SdeProblem twod_problem(std::string name, SdeProblem::ColumnFn g, SdeProblem::JacobianFn dg,
                        NoiseStructure structure) {
    return SdeProblem(
        std::move(name), 2, 2,
        [](const Vec& x) { return vec2(x[0] - 3.0 * x[0] * x[0] * x[0], x[1] - 3.0 * x[1] * x[1] * x[1]); },
        std::move(g), std::move(dg), structure, vec2(2.0, 3.0), 1.0,
        [](const Vec& x) { return mat2(1.0 - 9.0 * x[0] * x[0], 0.0, 0.0, 1.0 - 9.0 * x[1] * x[1]); });
}

}  // namespace

std::string_view to_string(BuiltinProblem p) {
    for (const auto& [id, name] : kBuiltinNames) {
        if (id == p) {
            return name;
        }
    }
    return "unknown";
}

BuiltinProblem parse_builtin(std::string_view name) {
    for (const auto& [id, n] : kBuiltinNames) {
        if (n == name) {
            return id;
        }
    }
    throw ConfigError("unknown problem '" + std::string(name) + "'");
}

std::vector<BuiltinProblem> all_builtins() {
    std::vector<BuiltinProblem> out;
    for (const auto& entry : kBuiltinNames) {
        out.push_back(entry.first);
    }
    return out;
}

SdeProblem make_builtin(BuiltinProblem which, const std::map<std::string, double>& parameters) {
    double s = 0.2;
    for (const auto& [key, value] : parameters) {
        if (key == "noise") {
            s = value;
        } else {
            throw ConfigError("unknown problem parameter '" + key + "'");
        }
    }
    const std::string name(to_string(which));

    switch (which) {
        case BuiltinProblem::scalar_mult:
            return scalar_problem(
                name, [s](const Vec& x, int) { return vec1(s * (1.0 - x[0])); },
                [s](const Vec&, int) { return mat1(-s); }, NoiseStructure::diagonal);
        case BuiltinProblem::scalar_add:
            return scalar_problem(
                name, [s](const Vec&, int) { return vec1(s); }, [](const Vec&, int) { return mat1(0.0); },
                NoiseStructure::additive);
        case BuiltinProblem::scalar_probe:
            return scalar_problem(
                name, [s](const Vec& x, int) { return vec1(s * x[0]); }, [s](const Vec&, int) { return mat1(s); },
                NoiseStructure::diagonal);
        case BuiltinProblem::twod_diagonal:
            // G_d = s * diag(x1, x2)
            return twod_problem(
                name, [s](const Vec& x, int i) { return i == 0 ? vec2(s * x[0], 0.0) : vec2(0.0, s * x[1]); },
                [s](const Vec&, int i) { return i == 0 ? mat2(s, 0.0, 0.0, 0.0) : mat2(0.0, 0.0, 0.0, s); },
                NoiseStructure::diagonal);
        case BuiltinProblem::twod_commutative:
            // G_c = s * [[x1, x2], [x2, x1]]
            return twod_problem(
                name, [s](const Vec& x, int i) { return i == 0 ? vec2(s * x[0], s * x[1]) : vec2(s * x[1], s * x[0]); },
                [s](const Vec&, int i) { return i == 0 ? mat2(s, 0.0, 0.0, s) : mat2(0.0, s, s, 0.0); },
                NoiseStructure::commutative);
        case BuiltinProblem::twod_noncommutative:
            // G_nc = s * [[1.5 x1, x2], [x2, 1.5 x1]]
            return twod_problem(
                name,
                [s](const Vec& x, int i) {
                    return i == 0 ? vec2(1.5 * s * x[0], s * x[1]) : vec2(s * x[1], 1.5 * s * x[0]);
                },
                [s](const Vec&, int i) { return i == 0 ? mat2(1.5 * s, 0.0, 0.0, s) : mat2(0.0, s, 1.5 * s, 0.0); },
                NoiseStructure::general);
    }
    throw ConfigError("unhandled builtin problem");
}

SdeProblem make_builtin(std::string_view name, const std::map<std::string, double>& parameters) {
    return make_builtin(parse_builtin(name), parameters);
}

JacobianReport check_jacobian(const SdeProblem& problem, std::span<const Vec> points, double tol, double fd_step) {
    JacobianReport report;
    const int d = problem.dim_state();
    for (const Vec& x : points) {
        double worst = 0.0;
        for (int i = 0; i < problem.dim_noise(); ++i) {
            const Mat analytic = problem.diffusion_jacobian(x, i);
            for (int k = 0; k < d; ++k) {
                Vec up = x;
                Vec down = x;
                up[k] += fd_step;
                down[k] -= fd_step;
                const Vec column =
                    (problem.diffusion_column(up, i) - problem.diffusion_column(down, i)) / (2.0 * fd_step);
                worst = std::max(worst, (column - analytic.col(k)).cwiseAbs().maxCoeff());
            }
        }
        report.per_point.push_back(worst);
        report.max_deviation = std::max(report.max_deviation, worst);
    }
    report.within_tolerance = report.max_deviation < tol;
    return report;
}

double commutator_defect(const SdeProblem& problem, const Vec& x) {
    const int m = problem.dim_noise();
    std::vector<Mat> jac;
    std::vector<Vec> col;
    for (int i = 0; i < m; ++i) {
        jac.push_back(problem.diffusion_jacobian(x, i));
        col.push_back(problem.diffusion_column(x, i));
    }
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const Vec diff = jac[i] * col[j] - jac[j] * col[i];
            worst = std::max(worst, diff.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

std::vector<Vec> sample_points(int dim, int count, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(lo, hi);
    std::vector<Vec> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        Vec x(dim);
        for (int k = 0; k < dim; ++k) {
            x[k] = uniform(rng);
        }
        points.push_back(x);
    }
    return points;
}

}  // namespace adamil
