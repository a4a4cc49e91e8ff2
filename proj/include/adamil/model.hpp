#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adamil/linalg.hpp"

namespace adamil {

enum class NoiseStructure { additive, diagonal, commutative, general };

std::string_view to_string(NoiseStructure s);

/**
 * Coefficients of the Itô system
 *
 *     dX = f(X) dt + sum_i g_i(X) dW_i,   X(0) = x0,   t in [0, T].
 *
 * Diffusion is exposed column by column together with the analytic Jacobian
 * Dg_i of each column. The drift Jacobian is optional and only used by the
 * split-step backward comparator; when absent it is approximated by central
 * differences.
 *
 * Instances are immutable and the coefficient callables must be pure, so one
 * problem can be shared by any number of concurrent path simulations.
 */
class SdeProblem {
public:
    using DriftFn = std::function<Vec(const Vec&)>;
    using ColumnFn = std::function<Vec(const Vec&, int)>;
    using JacobianFn = std::function<Mat(const Vec&, int)>;
    using DriftJacobianFn = std::function<Mat(const Vec&)>;

    SdeProblem(std::string name, int dim_state, int dim_noise, DriftFn drift, ColumnFn diffusion_column,
               JacobianFn diffusion_jacobian, NoiseStructure structure, Vec initial_state, double horizon,
               DriftJacobianFn drift_jacobian = {});

    const std::string& name() const { return name_; }
    int dim_state() const { return dim_state_; }
    int dim_noise() const { return dim_noise_; }
    NoiseStructure structure() const { return structure_; }
    const Vec& initial_state() const { return initial_state_; }
    double horizon() const { return horizon_; }

    Vec drift(const Vec& x) const { return drift_(x); }
    Vec diffusion_column(const Vec& x, int i) const { return column_(x, i); }
    Mat diffusion_jacobian(const Vec& x, int i) const { return jacobian_(x, i); }

    // d x m matrix whose i-th column is g_i(x).
    Mat diffusion_matrix(const Vec& x) const;

    bool has_drift_jacobian() const { return static_cast<bool>(drift_jacobian_); }
    // Analytic Df when supplied, central differences otherwise.
    Mat drift_jacobian(const Vec& x) const;

private:
    std::string name_;
    int dim_state_;
    int dim_noise_;
    DriftFn drift_;
    ColumnFn column_;
    JacobianFn jacobian_;
    NoiseStructure structure_;
    Vec initial_state_;
    double horizon_;
    DriftJacobianFn drift_jacobian_;
};

enum class BuiltinProblem {
    scalar_mult,
    scalar_add,
    scalar_probe,
    twod_diagonal,
    twod_commutative,
    twod_noncommutative,
};

std::string_view to_string(BuiltinProblem p);
// Throws ConfigError for names that are not one of the builtin identifiers.
BuiltinProblem parse_builtin(std::string_view name);
std::vector<BuiltinProblem> all_builtins();

// Recognised parameter: "noise" (diffusion scale, default 0.2). Unknown keys throw ConfigError.
SdeProblem make_builtin(BuiltinProblem which, const std::map<std::string, double>& parameters = {});
SdeProblem make_builtin(std::string_view name, const std::map<std::string, double>& parameters = {});

struct JacobianReport {
    double max_deviation = 0.0;
    std::vector<double> per_point;  // max elementwise deviation over all columns at each point
    bool within_tolerance = true;
};

// Compares Dg_i against a central finite-difference Jacobian of g_i at every point.
JacobianReport check_jacobian(const SdeProblem& problem, std::span<const Vec> points, double tol,
                              double fd_step = 1e-5);

// max_{i,j} || Dg_i(x) g_j(x) - Dg_j(x) g_i(x) ||_inf
double commutator_defect(const SdeProblem& problem, const Vec& x);

// Seed used for the property-check point clouds.
inline constexpr std::uint64_t kPropertySeed = 20240917;

// Points drawn uniformly from [lo, hi]^dim with a seeded generator.
std::vector<Vec> sample_points(int dim, int count, std::uint64_t seed = kPropertySeed, double lo = -5.0,
                               double hi = 5.0);

}  // namespace adamil
