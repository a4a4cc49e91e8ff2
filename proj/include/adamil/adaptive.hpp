#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "adamil/linalg.hpp"
#include "adamil/model.hpp"
#include "adamil/steppers.hpp"
#include "adamil/wiener.hpp"

namespace adamil {

// Path-bounded step controller h = max(h_min, min(h_max, delta / ||Y||)) with
// h_min = h_max / rho. Any step taken strictly between the bounds certifies
// ||Y|| <= rho * delta / h_max.
struct StrategyConfig {
    double h_max = 0.0;
    double rho = 0.0;
    double delta = 0.0;

    // delta defaults to h_max.
    static StrategyConfig make(double h_max, double rho);
    static StrategyConfig make(double h_max, double rho, double delta);

    double h_min() const { return h_max / rho; }
    // Throws ConfigError unless 0 < rho * h_min = h_max <= horizon, rho > 1 and 0 < delta <= h_max.
    void validate(double horizon) const;
};

struct StepProposal {
    double h = 0.0;
    bool backstop = false;
    double raw = 0.0;  // delta / ||state||, +inf at the origin
};

// Throws std::domain_error when the state norm is not finite.
StepProposal propose_step(const StrategyConfig& config, const Vec& state);

struct IntegrationOptions {
    // Replace every step's Lévy area by zero (diagnostic for commutative noise).
    bool zero_levy_area = false;
    // Keep the full mesh, states and flags. Off, only endpoint statistics are kept.
    bool keep_trajectory = true;
    // Map used on non-backstop adaptive steps: milstein, or euler for the adaptive EM variant.
    Scheme interior = Scheme::milstein;
    ComparatorOptions comparator;
};

/**
 * Result of one integration over [0, T].
 *
 * With keep_trajectory, times/states/backstop_flags/clamped_flags have one entry per
 * mesh point (flags are indexed by the step that starts at that point, so they have
 * step_count entries). Summary fields are filled in every case. A divergent path stops
 * at the first non-finite state; final_state is then the last finite one.
 */
struct SolutionPath {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<bool> backstop_flags;   // controller proposal <= h_min
    std::vector<bool> clamped_flags;    // step shortened to land on T
    std::vector<double> raw_proposals;  // pre-clamp delta / ||Y||, adaptive runs only

    std::int64_t step_count = 0;
    std::int64_t backstop_count = 0;
    double step_sum = 0.0;
    double final_time = 0.0;
    Vec final_state;
    bool divergent = false;

    double mean_step() const { return step_count > 0 ? step_sum / static_cast<double>(step_count) : 0.0; }
};

// Adaptive explicit Milstein with the tamed Milstein backstop. Requires
// path.horizon() == problem.horizon(), h_max a multiple of the fine resolution and
// h_min >= resolution. Proposed steps are rounded down to the fine grid but never
// below h_min; the final step is shortened to land on T and uses the interior map.
SolutionPath integrate_adaptive(const SdeProblem& problem, const StrategyConfig& config, const WienerPath& path,
                                const IntegrationOptions& options = {});

// Uniform mesh with step h (a multiple of the fine resolution), final step
// shortened if h does not divide T.
SolutionPath integrate_fixed(const SdeProblem& problem, Scheme scheme, double h, const WienerPath& path,
                             const IntegrationOptions& options = {});

// Columns: t, y1..yd, h, backstop. One row per mesh point; the last row carries an empty step.
void write_solution_csv(std::ostream& out, const SolutionPath& solution);

}  // namespace adamil
