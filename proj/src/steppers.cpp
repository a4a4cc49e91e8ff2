#include "adamil/steppers.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "adamil/errors.hpp"

namespace adamil {

namespace {

std::string describe(const Vec& state) {
    std::ostringstream os;
    os << "non-finite state after step: [";
    for (int k = 0; k < state.size(); ++k) {
        os << (k ? ", " : "") << state[k];
    }
    os << "]";
    return os.str();
}

Vec checked(Vec out) {
    if (!out.allFinite()) {
        throw OverflowError(std::move(out));
    }
    return out;
}

void add_noise(const SdeProblem& problem, const Vec& x, const Vec& dW, Vec& out) {
    for (int i = 0; i < problem.dim_noise(); ++i) {
        out += problem.diffusion_column(x, i) * dW[i];
    }
}

// sum_{i,j} Dg_i(x) g_j(x) I(j, i), grouped as sum_i Dg_i(x) (sum_j g_j(x) I(j, i)).
void add_milstein_correction(const SdeProblem& problem, const Vec& x, const Mat& I, Vec& out) {
    if (problem.structure() == NoiseStructure::additive) {
        return;
    }
    const int m = problem.dim_noise();
    std::array<Vec, kMaxDim> columns;
    for (int j = 0; j < m; ++j) {
        columns[static_cast<std::size_t>(j)] = problem.diffusion_column(x, j);
    }
    for (int i = 0; i < m; ++i) {
        Vec weighted = Vec::Zero(problem.dim_state());
        for (int j = 0; j < m; ++j) {
            weighted += columns[static_cast<std::size_t>(j)] * I(j, i);
        }
        out += problem.diffusion_jacobian(x, i) * weighted;
    }
}

constexpr std::array<std::pair<Scheme, std::string_view>, 6> kSchemeNames{{
    {Scheme::adaptive, "adaptive"},
    {Scheme::milstein, "milstein"},
    {Scheme::tamed, "tamed"},
    {Scheme::euler, "euler"},
    {Scheme::pmil, "pmil"},
    {Scheme::ssbm, "ssbm"},
}};

}  // namespace

OverflowError::OverflowError(Vec state) : std::runtime_error(describe(state)), state_(std::move(state)) {}

SolverError::SolverError(const std::string& what, std::vector<double> residual_trace)
    : std::runtime_error(what), trace_(std::move(residual_trace)) {}

std::string_view to_string(Scheme s) {
    for (const auto& [id, name] : kSchemeNames) {
        if (id == s) {
            return name;
        }
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view name) {
    for (const auto& [id, n] : kSchemeNames) {
        if (n == name) {
            return id;
        }
    }
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

Vec euler_maruyama_step(const SdeProblem& problem, const StepInput& in) {
    const Vec& x = in.state;
    Vec out = x + in.integrals.h * problem.drift(x);
    add_noise(problem, x, in.integrals.dW, out);
    return checked(std::move(out));
}

Vec milstein_step(const SdeProblem& problem, const StepInput& in) {
    const Vec& x = in.state;
    Vec out = x + in.integrals.h * problem.drift(x);
    add_noise(problem, x, in.integrals.dW, out);
    add_milstein_correction(problem, x, in.integrals.I, out);
    return checked(std::move(out));
}

Vec tamed_milstein_step(const SdeProblem& problem, const StepInput& in) {
    const Vec& x = in.state;
    const double h = in.integrals.h;
    const Vec f = problem.drift(x);
    Vec out = x + (h * f) / (1.0 + h * f.norm());
    add_noise(problem, x, in.integrals.dW, out);
    add_milstein_correction(problem, x, in.integrals.I, out);
    return checked(std::move(out));
}

Vec backstop_step(const SdeProblem& problem, const StepInput& in) { return tamed_milstein_step(problem, in); }

Vec pmil_projection(const Vec& x, double h, double exponent) {
    const double radius = std::pow(h, -exponent);
    const double norm = x.norm();
    if (norm <= radius) {
        return x;
    }
    return (radius / norm) * x;
}

ImplicitSolve solve_drift_implicit(const SdeProblem& problem, const Vec& x, double h,
                                   const ComparatorOptions& options) {
    const int d = problem.dim_state();
    ImplicitSolve solve;
    solve.value = x;
    for (int iter = 0;; ++iter) {
        const Vec residual = solve.value - x - h * problem.drift(solve.value);
        const double norm = residual.norm();
        solve.residual_trace.push_back(norm);
        if (norm <= options.newton_tolerance * (1.0 + solve.value.norm())) {
            solve.iterations = iter;
            return solve;
        }
        if (iter == options.newton_max_iterations || !std::isfinite(norm)) {
            throw SolverError("split-step backward Newton solve did not converge after " + std::to_string(iter) +
                                  " iterations",
                              solve.residual_trace);
        }
        const Mat jac = Mat::Identity(d, d) - h * problem.drift_jacobian(solve.value);
        solve.value -= jac.partialPivLu().solve(residual);
    }
}

Vec comparator_step(Scheme kind, const SdeProblem& problem, const StepInput& in, const ComparatorOptions& options) {
    switch (kind) {
        case Scheme::milstein: return milstein_step(problem, in);
        case Scheme::tamed: return tamed_milstein_step(problem, in);
        case Scheme::euler: return euler_maruyama_step(problem, in);
        case Scheme::pmil: {
            const Vec projected = pmil_projection(in.state, in.integrals.h, options.pmil_exponent);
            return milstein_step(problem, StepInput{projected, in.integrals});
        }
        case Scheme::ssbm: {
            const ImplicitSolve solve = solve_drift_implicit(problem, in.state, in.integrals.h, options);
            Vec out = solve.value;
            add_noise(problem, solve.value, in.integrals.dW, out);
            add_milstein_correction(problem, solve.value, in.integrals.I, out);
            return checked(std::move(out));
        }
        case Scheme::adaptive: break;
    }
    throw ConfigError("adaptive is not a fixed-step scheme");
}

}  // namespace adamil
