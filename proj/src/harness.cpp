#include "adamil/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>

#include "adamil/errors.hpp"
#include "adamil/wiener.hpp"

namespace adamil {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PathResult {
    std::vector<double> errors;
    std::vector<double> mean_steps;
    std::vector<std::int64_t> steps;
    std::vector<std::int64_t> backstops;
    std::vector<double> seconds;
};

double mean(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

}  // namespace

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (count <= 0) {
        return;
    }
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, count);
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(count));
    auto run = [&](int i) {
        try {
            body(i);
        } catch (...) {
            failures[static_cast<std::size_t>(i)] = std::current_exception();
        }
    };
    if (workers == 1) {
        for (int i = 0; i < count; ++i) {
            run(i);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int i = next++; i < count; i = next++) {
                    run(i);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    // Report the failure of the lowest index so parallel and serial runs agree.
    for (const auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }
}

double ExperimentConfig::reference_step(double horizon) const { return std::ldexp(horizon, -reference_exponent); }

void ExperimentConfig::validate(double horizon) const {
    if (paths < 1) {
        throw ConfigError("paths must be >= 1");
    }
    if (reference_exponent < 1) {
        throw ConfigError("ref_exponent must be >= 1");
    }
    if (fine_exponent < reference_exponent + 4) {
        throw ConfigError("fine_exponent must be at least ref_exponent + 4");
    }
    const double ref = reference_step(horizon);
    for (double h : h_max) {
        const double ratio = h / ref;
        if (!(h > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
            throw ConfigError("h_max " + std::to_string(h) + " is not a multiple of the reference step " +
                              std::to_string(ref));
        }
    }
}

RmsEstimate summarize_errors(std::span<const double> errors) {
    RmsEstimate est;
    std::vector<double> squares;
    for (double e : errors) {
        if (std::isfinite(e)) {
            squares.push_back(e * e);
        } else {
            ++est.divergent;
        }
    }
    est.valid = static_cast<int>(squares.size());
    if (squares.empty()) {
        est.rms = kNaN;
        est.std_error = kNaN;
        return est;
    }
    const double mean_sq = mean(squares);
    est.rms = std::sqrt(mean_sq);
    if (squares.size() > 1 && mean_sq > 0.0) {
        double ss = 0.0;
        for (double s : squares) {
            ss += (s - mean_sq) * (s - mean_sq);
        }
        const double var = ss / static_cast<double>(squares.size() - 1);
        const double se_mean_sq = std::sqrt(var / static_cast<double>(squares.size()));
        est.std_error = se_mean_sq / (2.0 * est.rms);
    }
    return est;
}

std::vector<RunStats> evaluate_runs(const SdeProblem& problem, const ExperimentConfig& config,
                                    const std::vector<RunSpec>& specs) {
    const double horizon = problem.horizon();
    config.validate(horizon);
    const double ref_step = config.reference_step(horizon);
    const std::size_t nspec = specs.size();
    std::vector<PathResult> results(static_cast<std::size_t>(config.paths));

    IntegrationOptions candidate_options;
    candidate_options.keep_trajectory = false;
    candidate_options.zero_levy_area = config.zero_levy_area;
    candidate_options.comparator = config.comparator;
    IntegrationOptions reference_options;
    reference_options.keep_trajectory = false;

    parallel_for(config.paths, config.threads, [&](int p) {
        PathResult& out = results[static_cast<std::size_t>(p)];
        out.errors.assign(nspec, kNaN);
        out.mean_steps.assign(nspec, kNaN);
        out.steps.assign(nspec, 0);
        out.backstops.assign(nspec, 0);
        out.seconds.assign(nspec, 0.0);

        const auto gen_start = Clock::now();
        const WienerPath path = WienerPath::generate(path_seed(config.base_seed, static_cast<std::uint64_t>(p)),
                                                     config.fine_exponent, problem.dim_noise(), horizon);
        const double gen_seconds = seconds_since(gen_start);

        const SolutionPath ref = integrate_fixed(problem, Scheme::tamed, ref_step, path, reference_options);
        if (ref.divergent) {
            throw ExperimentError("reference solution diverged on path " + std::to_string(p));
        }
        for (std::size_t s = 0; s < nspec; ++s) {
            const RunSpec& spec = specs[s];
            const auto start = Clock::now();
            SolutionPath sol;
            if (spec.scheme == Scheme::adaptive) {
                const auto strategy = StrategyConfig::make(spec.step, config.rho, config.delta.value_or(spec.step));
                sol = integrate_adaptive(problem, strategy, path, candidate_options);
            } else {
                sol = integrate_fixed(problem, spec.scheme, spec.step, path, candidate_options);
            }
            out.seconds[s] = gen_seconds + seconds_since(start);
            out.steps[s] = sol.step_count;
            out.backstops[s] = sol.backstop_count;
            out.mean_steps[s] = sol.mean_step();
            if (!sol.divergent) {
                out.errors[s] = (ref.final_state - sol.final_state).norm();
            }
        }
    });

    std::vector<RunStats> stats(nspec);
    for (std::size_t s = 0; s < nspec; ++s) {
        RunStats& st = stats[s];
        st.spec = specs[s];
        for (const PathResult& r : results) {
            st.errors.push_back(r.errors[s]);
            st.mean_steps.push_back(r.mean_steps[s]);
            st.steps += r.steps[s];
            st.backstop_steps += r.backstops[s];
            st.seconds += r.seconds[s];
            st.divergent += std::isfinite(r.errors[s]) ? 0 : 1;
        }
    }
    return stats;
}

RmsEstimate rms_error(const SdeProblem& problem, const ExperimentConfig& config, const RunSpec& spec) {
    const auto stats = evaluate_runs(problem, config, {spec});
    return summarize_errors(stats.front().errors);
}

std::vector<ErrorRow> ErrorTable::rows_for(Scheme s) const {
    std::vector<ErrorRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [s](const ErrorRow& r) { return r.scheme == s; });
    return out;
}

std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
        if (x[k] > 0.0 && y[k] > 0.0 && std::isfinite(x[k]) && std::isfinite(y[k])) {
            lx.push_back(std::log2(x[k]));
            ly.push_back(std::log2(y[k]));
        }
    }
    if (lx.size() < 2) {
        return std::nullopt;
    }
    const double mx = mean(lx);
    const double my = mean(ly);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    if (sxx == 0.0) {
        return std::nullopt;
    }
    return sxy / sxx;
}

namespace {

ErrorRow make_row(const RunStats& st, double h_max, double h_mean) {
    const RmsEstimate est = summarize_errors(st.errors);
    ErrorRow row;
    row.scheme = st.spec.scheme;
    row.h_max = h_max;
    row.rms_error = est.rms;
    row.rms_std_error = est.std_error;
    row.h_mean = h_mean;
    row.cpu_seconds = st.seconds;
    row.backstop_rate = st.steps > 0 ? static_cast<double>(st.backstop_steps) / static_cast<double>(st.steps) : 0.0;
    row.divergent_count = st.divergent;
    return row;
}

}  // namespace

ErrorTable convergence_table(const SdeProblem& problem, const ExperimentConfig& config) {
    if (config.h_max.empty()) {
        throw ConfigError("convergence table needs at least one h_max");
    }
    const double horizon = problem.horizon();
    const double resolution = std::ldexp(horizon, -config.fine_exponent);

    std::vector<RunSpec> adaptive_specs;
    for (double h : config.h_max) {
        adaptive_specs.push_back({Scheme::adaptive, h});
    }
    const auto adaptive_stats = evaluate_runs(problem, config, adaptive_specs);

    ErrorTable table;
    std::vector<double> h_means;
    for (std::size_t k = 0; k < adaptive_stats.size(); ++k) {
        std::vector<double> finite;
        for (double v : adaptive_stats[k].mean_steps) {
            if (std::isfinite(v)) {
                finite.push_back(v);
            }
        }
        h_means.push_back(mean(finite));
        table.rows.push_back(make_row(adaptive_stats[k], config.h_max[k], h_means.back()));
    }

    std::vector<RunSpec> fixed_specs;
    std::vector<double> matched_h_max;
    for (Scheme s : config.schemes) {
        if (s == Scheme::adaptive) {
            continue;
        }
        for (std::size_t k = 0; k < config.h_max.size(); ++k) {
            const double units = std::max(1.0, std::round(h_means[k] / resolution));
            fixed_specs.push_back({s, units * resolution});
            matched_h_max.push_back(config.h_max[k]);
        }
    }
    if (!fixed_specs.empty()) {
        const auto fixed_stats = evaluate_runs(problem, config, fixed_specs);
        for (std::size_t k = 0; k < fixed_stats.size(); ++k) {
            table.rows.push_back(make_row(fixed_stats[k], matched_h_max[k], fixed_specs[k].step));
        }
    }

    std::vector<Scheme> seen{Scheme::adaptive};
    for (Scheme s : config.schemes) {
        if (std::find(seen.begin(), seen.end(), s) == seen.end()) {
            seen.push_back(s);
        }
    }
    for (Scheme s : seen) {
        std::vector<double> x;
        std::vector<double> y;
        for (const ErrorRow& r : table.rows_for(s)) {
            x.push_back(s == Scheme::adaptive ? r.h_max : r.h_mean);
            y.push_back(r.rms_error);
        }
        table.slopes[s] = loglog_slope(x, y);
    }
    return table;
}

std::vector<EfficiencyRow> efficiency_rows(const ErrorTable& table) {
    std::vector<EfficiencyRow> out;
    for (const ErrorRow& r : table.rows) {
        out.push_back({r.scheme, r.h_max, r.rms_error, r.cpu_seconds});
    }
    return out;
}

std::vector<EfficiencyRow> efficiency_table(const SdeProblem& problem, const ExperimentConfig& config) {
    return efficiency_rows(convergence_table(problem, config));
}

std::optional<double> cost_ratio_at_matched_error(std::span<const EfficiencyRow> a, std::span<const EfficiencyRow> b) {
    const EfficiencyRow* target = nullptr;
    for (const auto& r : a) {
        if (std::isfinite(r.rms_error) && r.rms_error > 0.0 && (!target || r.rms_error < target->rms_error)) {
            target = &r;
        }
    }
    if (!target) {
        return std::nullopt;
    }
    std::vector<EfficiencyRow> frontier;
    for (const auto& r : b) {
        if (std::isfinite(r.rms_error) && r.rms_error > 0.0 && r.cpu_seconds > 0.0) {
            frontier.push_back(r);
        }
    }
    std::sort(frontier.begin(), frontier.end(),
              [](const EfficiencyRow& l, const EfficiencyRow& r) { return l.rms_error < r.rms_error; });
    const double le = std::log(target->rms_error);
    for (std::size_t k = 0; k + 1 < frontier.size(); ++k) {
        const double e0 = std::log(frontier[k].rms_error);
        const double e1 = std::log(frontier[k + 1].rms_error);
        if (le >= e0 && le <= e1 && e1 > e0) {
            const double w = (le - e0) / (e1 - e0);
            const double lc = (1.0 - w) * std::log(frontier[k].cpu_seconds) + w * std::log(frontier[k + 1].cpu_seconds);
            return std::exp(lc) / target->cpu_seconds;
        }
    }
    return std::nullopt;
}

std::vector<BackstopPoint> backstop_probability(const SdeProblem& problem, const BackstopConfig& config) {
    if (config.paths < 1 || config.rhos.empty()) {
        throw ConfigError("backstop experiment needs paths >= 1 and a non-empty rho list");
    }
    const std::size_t nrho = config.rhos.size();
    // solutions[p][r]
    std::vector<std::vector<SolutionPath>> solutions(static_cast<std::size_t>(config.paths));
    parallel_for(config.paths, config.threads, [&](int p) {
        const WienerPath path = WienerPath::generate(path_seed(config.base_seed, static_cast<std::uint64_t>(p)),
                                                     config.fine_exponent, problem.dim_noise(), problem.horizon());
        auto& row = solutions[static_cast<std::size_t>(p)];
        for (double rho : config.rhos) {
            row.push_back(integrate_adaptive(problem, StrategyConfig::make(config.h_max, rho), path));
        }
    });

    std::vector<BackstopPoint> curve;
    for (std::size_t r = 0; r < nrho; ++r) {
        BackstopPoint point;
        point.rho = config.rhos[r];
        int hit_paths = 0;
        double mean_step_sum = 0.0;
        std::size_t longest = 0;
        for (int p = 0; p < config.paths; ++p) {
            const SolutionPath& sol = solutions[static_cast<std::size_t>(p)][r];
            hit_paths += sol.backstop_count > 0 ? 1 : 0;
            mean_step_sum += sol.mean_step();
            longest = std::max(longest, sol.backstop_flags.size());
            for (std::size_t n = 0; n < sol.backstop_flags.size(); ++n) {
                if (sol.backstop_flags[n]) {
                    point.occurrences.push_back({p, sol.times[n]});
                }
            }
        }
        const double m = static_cast<double>(config.paths);
        point.probability = hit_paths / m;
        point.probability_std_error = std::sqrt(point.probability * (1.0 - point.probability) / m);
        point.h_mean = mean_step_sum / m;

        for (std::size_t n = 0; n < longest; ++n) {
            StepProfile prof;
            prof.index = static_cast<std::int64_t>(n);
            double sum_t = 0.0;
            double sum_h = 0.0;
            double sum_h2 = 0.0;
            for (int p = 0; p < config.paths; ++p) {
                const SolutionPath& sol = solutions[static_cast<std::size_t>(p)][r];
                if (n >= sol.backstop_flags.size()) {
                    continue;
                }
                const double h = sol.times[n + 1] - sol.times[n];
                ++prof.count;
                sum_t += sol.times[n];
                sum_h += h;
                sum_h2 += h * h;
                prof.backstop_hits += sol.backstop_flags[n] ? 1 : 0;
            }
            const double c = prof.count;
            prof.mean_time = sum_t / c;
            prof.mean_step = sum_h / c;
            prof.step_variance = prof.count > 1 ? std::max(0.0, (sum_h2 - c * prof.mean_step * prof.mean_step) / (c - 1.0)) : 0.0;
            point.profile.push_back(prof);
        }
        curve.push_back(std::move(point));
    }
    return curve;
}

void write_error_csv(std::ostream& out, const ErrorTable& table) {
    const auto prec = out.precision(17);
    out << "scheme,h_max,rms_error,rms_std_error,h_mean,cpu_seconds,backstop_rate,divergent_count\n";
    for (const ErrorRow& r : table.rows) {
        out << to_string(r.scheme) << ',' << r.h_max << ',' << r.rms_error << ',' << r.rms_std_error << ',' << r.h_mean
            << ',' << r.cpu_seconds << ',' << r.backstop_rate << ',' << r.divergent_count << '\n';
    }
    out.precision(prec);
}

void write_backstop_csv(std::ostream& out, std::span<const BackstopPoint> curve) {
    const auto prec = out.precision(17);
    out << "rho,prob,prob_std_error\n";
    for (const BackstopPoint& p : curve) {
        out << p.rho << ',' << p.probability << ',' << p.probability_std_error << '\n';
    }
    out.precision(prec);
}

void write_profile_csv(std::ostream& out, std::span<const BackstopPoint> curve) {
    const auto prec = out.precision(17);
    out << "rho,n,count,mean_t,mean_h,var_h,backstop_hits\n";
    for (const BackstopPoint& p : curve) {
        for (const StepProfile& s : p.profile) {
            out << p.rho << ',' << s.index << ',' << s.count << ',' << s.mean_time << ',' << s.mean_step << ','
                << s.step_variance << ',' << s.backstop_hits << '\n';
        }
    }
    out.precision(prec);
}

}  // namespace adamil

namespace adamil {

std::vector<MomentCheck> levy_moment_check(int max_order, int samples, int fine_exponent, std::uint64_t base_seed,
                                           int threads) {
    if (max_order < 1 || max_order > kMaxMomentOrder) {
        throw UsageError("moment order must lie in [1, " + std::to_string(kMaxMomentOrder) + "]");
    }
    if (samples < 2) {
        throw ConfigError("moment check needs at least 2 samples");
    }
    std::vector<double> areas(static_cast<std::size_t>(samples));
    parallel_for(samples, threads, [&](int s) {
        const WienerPath path =
            WienerPath::generate(path_seed(base_seed, static_cast<std::uint64_t>(s)), fine_exponent, 2, 1.0);
        areas[static_cast<std::size_t>(s)] = integrals_over(path, 0, path.num_steps()).A(0, 1);
    });

    auto mean_and_se = [&](auto&& transform) {
        double sum = 0.0;
        double sum2 = 0.0;
        for (double a : areas) {
            const double v = transform(a);
            sum += v;
            sum2 += v * v;
        }
        const double n = static_cast<double>(areas.size());
        const double mu = sum / n;
        const double var = std::max(0.0, (sum2 - n * mu * mu) / (n - 1.0));
        return std::pair{mu, std::sqrt(var / n)};
    };

    std::vector<MomentCheck> out;
    for (int b = 1; b <= max_order; ++b) {
        const LevyMoment exact = moment_constant(b);
        MomentCheck c;
        c.order = b;
        c.exact = exact.value;
        c.abs_bound = exact.abs_bound;
        std::tie(c.estimate, c.std_error) = mean_and_se([b](double a) { return std::pow(a, b); });
        std::tie(c.abs_estimate, c.abs_std_error) = mean_and_se([b](double a) { return std::pow(std::abs(a), b); });
        const bool near = std::abs(c.estimate - c.exact) <= 4.0 * c.std_error;
        c.passed = b % 2 == 0 ? near : near && c.abs_estimate <= c.abs_bound;
        out.push_back(c);
    }
    return out;
}

}  // namespace adamil
