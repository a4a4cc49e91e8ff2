#include "adamil/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "adamil/errors.hpp"

namespace adamil {

namespace {

// Relative slack when mapping real step lengths onto fine-grid counts.
constexpr double kGridSlack = 1e-9;

std::int64_t grid_multiple(double h, double resolution, const char* what) {
    const double ratio = h / resolution;
    const double nearest = std::round(ratio);
    if (nearest < 1.0 || std::abs(ratio - nearest) > kGridSlack * nearest) {
        throw ConfigError(std::string(what) + " must be a positive multiple of the fine resolution " +
                          std::to_string(resolution));
    }
    return static_cast<std::int64_t>(nearest);
}

class Recorder {
public:
    Recorder(const Vec& x0, bool keep) : keep_(keep) {
        solution_.final_state = x0;
        if (keep_) {
            solution_.times.push_back(0.0);
            solution_.states.push_back(x0);
        }
    }

    void step(double t_next, double h, const Vec& y, bool backstop, bool clamped, double raw) {
        ++solution_.step_count;
        solution_.step_sum += h;
        solution_.backstop_count += backstop ? 1 : 0;
        solution_.final_time = t_next;
        solution_.final_state = y;
        if (keep_) {
            solution_.times.push_back(t_next);
            solution_.states.push_back(y);
            solution_.backstop_flags.push_back(backstop);
            solution_.clamped_flags.push_back(clamped);
            solution_.raw_proposals.push_back(raw);
        }
    }

    void mark_divergent() { solution_.divergent = true; }
    SolutionPath take() { return std::move(solution_); }

private:
    bool keep_;
    SolutionPath solution_;
};

void check_horizon(const SdeProblem& problem, const WienerPath& path) {
    if (path.horizon() != problem.horizon()) {
        throw ConfigError("Wiener path horizon does not match problem horizon");
    }
    if (path.dim_noise() != problem.dim_noise()) {
        throw ConfigError("Wiener path dimension does not match problem noise dimension");
    }
}

}  // namespace

StrategyConfig StrategyConfig::make(double h_max, double rho) { return make(h_max, rho, h_max); }

StrategyConfig StrategyConfig::make(double h_max, double rho, double delta) {
    StrategyConfig c;
    c.h_max = h_max;
    c.rho = rho;
    c.delta = delta;
    return c;
}

void StrategyConfig::validate(double horizon) const {
    if (!(h_max > 0.0) || !(h_max <= horizon)) {
        throw ConfigError("h_max must lie in (0, T]");
    }
    if (!(rho > 1.0) || !std::isfinite(rho)) {
        throw ConfigError("rho must be finite and > 1");
    }
    if (!(delta > 0.0) || delta > h_max) {
        throw ConfigError("delta must lie in (0, h_max]");
    }
}

StepProposal propose_step(const StrategyConfig& config, const Vec& state) {
    const double norm = state.norm();
    if (!std::isfinite(norm)) {
        throw std::domain_error("step controller received a non-finite state");
    }
    StepProposal p;
    p.raw = norm == 0.0 ? std::numeric_limits<double>::infinity() : config.delta / norm;
    p.h = std::max(config.h_min(), std::min(config.h_max, p.raw));
    p.backstop = p.raw <= config.h_min();
    return p;
}

SolutionPath integrate_adaptive(const SdeProblem& problem, const StrategyConfig& config, const WienerPath& path,
                                const IntegrationOptions& options) {
    check_horizon(problem, path);
    config.validate(problem.horizon());
    const double resolution = path.resolution();
    const std::int64_t max_units = grid_multiple(config.h_max, resolution, "h_max");
    const double min_ratio = config.h_min() / resolution;
    if (min_ratio < 1.0 - kGridSlack) {
        throw ConfigError("h_min = " + std::to_string(config.h_min()) + " is below the fine resolution " +
                          std::to_string(resolution) + "; raise the fine exponent");
    }
    const auto min_units = static_cast<std::int64_t>(std::ceil(min_ratio * (1.0 - kGridSlack)));
    if (options.interior != Scheme::milstein && options.interior != Scheme::euler) {
        throw ConfigError("adaptive interior map must be milstein or euler");
    }

    const std::int64_t total = path.num_steps();
    Recorder rec(problem.initial_state(), options.keep_trajectory);
    Vec y = problem.initial_state();
    std::int64_t pos = 0;
    try {
        while (pos < total) {
            const StepProposal proposal = propose_step(config, y);
            std::int64_t units = proposal.backstop
                                     ? min_units
                                     : static_cast<std::int64_t>(std::floor(proposal.h / resolution * (1.0 + kGridSlack)));
            units = std::clamp(units, min_units, max_units);
            const bool clamped = units > total - pos;
            if (clamped) {
                units = total - pos;
            }
            IteratedIntegrals integrals = integrals_over(path, pos, pos + units);
            if (options.zero_levy_area) {
                integrals = integrals.without_levy_area();
            }
            const StepInput in{y, integrals};
            if (proposal.backstop && !clamped) {
                y = backstop_step(problem, in);
            } else if (options.interior == Scheme::euler) {
                y = euler_maruyama_step(problem, in);
            } else {
                y = milstein_step(problem, in);
            }
            pos += units;
            const double t = pos == total ? path.horizon() : static_cast<double>(pos) * resolution;
            rec.step(t, integrals.h, y, proposal.backstop, clamped, proposal.raw);
        }
    } catch (const OverflowError&) {
        rec.mark_divergent();
    }
    return rec.take();
}

SolutionPath integrate_fixed(const SdeProblem& problem, Scheme scheme, double h, const WienerPath& path,
                             const IntegrationOptions& options) {
    check_horizon(problem, path);
    if (scheme == Scheme::adaptive) {
        throw ConfigError("integrate_fixed needs a fixed-step scheme");
    }
    const double resolution = path.resolution();
    const std::int64_t step_units = grid_multiple(h, resolution, "fixed step");
    const std::int64_t total = path.num_steps();
    Recorder rec(problem.initial_state(), options.keep_trajectory);
    Vec y = problem.initial_state();
    std::int64_t pos = 0;
    try {
        while (pos < total) {
            const std::int64_t units = std::min(step_units, total - pos);
            IteratedIntegrals integrals = integrals_over(path, pos, pos + units);
            if (options.zero_levy_area) {
                integrals = integrals.without_levy_area();
            }
            y = comparator_step(scheme, problem, StepInput{y, integrals}, options.comparator);
            pos += units;
            const double t = pos == total ? path.horizon() : static_cast<double>(pos) * resolution;
            rec.step(t, integrals.h, y, false, units < step_units, std::numeric_limits<double>::quiet_NaN());
        }
    } catch (const OverflowError&) {
        rec.mark_divergent();
    }
    return rec.take();
}

void write_solution_csv(std::ostream& out, const SolutionPath& solution) {
    if (solution.states.empty()) {
        throw UsageError("solution was integrated without keep_trajectory");
    }
    const auto d = solution.states.front().size();
    const auto prec = out.precision(17);
    out << "t";
    for (int k = 0; k < d; ++k) {
        out << ",y" << (k + 1);
    }
    out << ",h,backstop\n";
    for (std::size_t n = 0; n < solution.states.size(); ++n) {
        out << solution.times[n];
        for (int k = 0; k < d; ++k) {
            out << ',' << solution.states[n][k];
        }
        if (n + 1 < solution.times.size()) {
            out << ',' << (solution.times[n + 1] - solution.times[n]) << ',' << (solution.backstop_flags[n] ? 1 : 0);
        } else {
            out << ",,";
        }
        out << '\n';
    }
    out.precision(prec);
}

}  // namespace adamil
