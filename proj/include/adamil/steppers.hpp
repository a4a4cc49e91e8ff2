#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adamil/linalg.hpp"
#include "adamil/model.hpp"
#include "adamil/wiener.hpp"

namespace adamil {

// Raised when a one-step map produces a non-finite state. Explicit Milstein on
// superlinear drift can legitimately blow up on a coarse step; callers decide
// whether that is fatal.
class OverflowError : public std::runtime_error {
public:
    explicit OverflowError(Vec state);
    const Vec& state() const { return state_; }

private:
    Vec state_;
};

// Raised by the split-step backward solve when Newton fails to converge.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> residual_trace);
    const std::vector<double>& residual_trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

enum class Scheme { adaptive, milstein, tamed, euler, pmil, ssbm };

std::string_view to_string(Scheme s);
// Throws ConfigError on unknown names.
Scheme parse_scheme(std::string_view name);

// State at the start of a step plus the Wiener integrals over it (integrals.h is the step length).
struct StepInput {
    const Vec& state;
    const IteratedIntegrals& integrals;
};

// x + h f(x) + sum_i g_i(x) dW_i
Vec euler_maruyama_step(const SdeProblem& problem, const StepInput& in);

// x + h f(x) + sum_i g_i(x) dW_i + sum_{i,j} Dg_i(x) g_j(x) I(j, i)
Vec milstein_step(const SdeProblem& problem, const StepInput& in);

// Milstein with the drift increment tamed to h f(x) / (1 + h ||f(x)||).
// Keeps the full Lévy-area correction, so it is usable for non-commutative noise.
Vec tamed_milstein_step(const SdeProblem& problem, const StepInput& in);

// The map applied when the controller falls back to h_min. Currently tamed Milstein.
Vec backstop_step(const SdeProblem& problem, const StepInput& in);

struct ComparatorOptions {
    // Projected Milstein keeps states inside the ball of radius h^-pmil_exponent.
    double pmil_exponent = 0.25;
    int newton_max_iterations = 50;
    double newton_tolerance = 1e-13;
};

// Projection of x onto the ball of radius h^-exponent.
Vec pmil_projection(const Vec& x, double h, double exponent);

struct ImplicitSolve {
    Vec value;
    int iterations = 0;
    std::vector<double> residual_trace;
};

// Solves y = x + h f(y) by Newton's method.
ImplicitSolve solve_drift_implicit(const SdeProblem& problem, const Vec& x, double h,
                                   const ComparatorOptions& options = {});

// Dispatches fixed-step schemes. Scheme::adaptive is not a one-step map and throws ConfigError.
Vec comparator_step(Scheme kind, const SdeProblem& problem, const StepInput& in,
                    const ComparatorOptions& options = {});

}  // namespace adamil
