#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adamil/adaptive.hpp"
#include "adamil/model.hpp"
#include "adamil/steppers.hpp"

namespace adamil {

inline constexpr std::uint64_t kDefaultBaseSeed = 0x5EED2024;

// Seed of Monte Carlo path `index`. Growing M never reshuffles earlier paths.
inline std::uint64_t path_seed(std::uint64_t base, std::uint64_t index) { return base ^ index; }

struct ExperimentConfig {
    std::vector<Scheme> schemes{Scheme::adaptive};
    std::vector<double> h_max;
    double rho = 16.0;
    std::optional<double> delta;  // defaults to each h_max
    int paths = 100;
    int reference_exponent = 16;  // reference step T * 2^-reference_exponent
    int fine_exponent = 20;       // Wiener path resolution T * 2^-fine_exponent
    std::uint64_t base_seed = kDefaultBaseSeed;
    int threads = 0;  // 0: hardware concurrency
    bool zero_levy_area = false;
    ComparatorOptions comparator;

    double reference_step(double horizon) const;
    // Throws ConfigError: fine_exponent >= reference_exponent + 4, every h_max a
    // multiple of the reference step, paths >= 1.
    void validate(double horizon) const;
};

// One candidate run evaluated against the reference on every path.
struct RunSpec {
    Scheme scheme = Scheme::adaptive;
    double step = 0.0;  // h_max for adaptive, the fixed step otherwise
};

struct RunStats {
    RunSpec spec;
    std::vector<double> errors;  // per path ||Y_ref(T) - Y(T)||, NaN when divergent
    std::vector<double> mean_steps;  // per path (1/N) sum h_n
    std::int64_t steps = 0;
    std::int64_t backstop_steps = 0;
    int divergent = 0;
    double seconds = 0.0;  // path generation + this run, summed over paths
};

struct RmsEstimate {
    double rms = 0.0;
    double std_error = 0.0;
    int valid = 0;
    int divergent = 0;
};

// rms = sqrt(mean e^2); std_error from the sample standard deviation of e^2 through
// the square root (delta method). Non-finite entries count as divergent and are skipped.
RmsEstimate summarize_errors(std::span<const double> errors);

// Runs the reference (tamed Milstein at the reference step) and every spec on each
// path. Throws ExperimentError if a reference path diverges.
std::vector<RunStats> evaluate_runs(const SdeProblem& problem, const ExperimentConfig& config,
                                    const std::vector<RunSpec>& specs);

RmsEstimate rms_error(const SdeProblem& problem, const ExperimentConfig& config, const RunSpec& spec);

struct ErrorRow {
    Scheme scheme = Scheme::adaptive;
    double h_max = 0.0;
    double rms_error = 0.0;
    double rms_std_error = 0.0;
    double h_mean = 0.0;
    double cpu_seconds = 0.0;
    double backstop_rate = 0.0;  // fraction of steps taken by the backstop
    int divergent_count = 0;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;
    // Least-squares slope of log2(rms) against log2(step); absent with < 2 valid points.
    std::map<Scheme, std::optional<double>> slopes;

    std::vector<ErrorRow> rows_for(Scheme s) const;
};

// Least-squares slope of log2(y) on log2(x); pairs with a non-positive or
// non-finite entry are skipped. Absent when fewer than two pairs remain.
std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y);

/**
 * Strong-error sweep over config.h_max.
 *
 * The adaptive scheme always runs (its h_mean sets the step of the fixed-step
 * comparators, rounded to the nearest fine-grid multiple). Adaptive rows are fitted
 * against h_max, fixed-step rows against the step they actually used. A fixed-step
 * row reports the adaptive h_max it is matched to and its own step as h_mean.
 */
ErrorTable convergence_table(const SdeProblem& problem, const ExperimentConfig& config);

struct EfficiencyRow {
    Scheme scheme = Scheme::adaptive;
    double h_max = 0.0;
    double rms_error = 0.0;
    double cpu_seconds = 0.0;
};

std::vector<EfficiencyRow> efficiency_rows(const ErrorTable& table);
std::vector<EfficiencyRow> efficiency_table(const SdeProblem& problem, const ExperimentConfig& config);

// cpu_seconds(b) / cpu_seconds(a) at the rms of `a`, interpolated log-log along b's
// frontier. Absent when the rms lies outside b's range.
std::optional<double> cost_ratio_at_matched_error(std::span<const EfficiencyRow> a, std::span<const EfficiencyRow> b);

struct BackstopConfig {
    std::vector<double> rhos{2.0, 3.0, 4.0, 5.0, 6.0};
    double h_max = 1.0 / 256.0;
    int paths = 100;
    int fine_exponent = 16;
    std::uint64_t base_seed = kDefaultBaseSeed;
    int threads = 0;
};

struct StepProfile {
    std::int64_t index = 0;   // mesh index n
    int count = 0;            // paths that reach step n
    double mean_time = 0.0;   // mean t_n
    double mean_step = 0.0;   // mean h_{n+1}
    double step_variance = 0.0;
    int backstop_hits = 0;
};

struct BackstopOccurrence {
    int path = 0;
    double time = 0.0;
};

struct BackstopPoint {
    double rho = 0.0;
    double probability = 0.0;  // fraction of paths with at least one backstop step
    double probability_std_error = 0.0;
    double h_mean = 0.0;
    std::vector<StepProfile> profile;
    std::vector<BackstopOccurrence> occurrences;
};

std::vector<BackstopPoint> backstop_probability(const SdeProblem& problem, const BackstopConfig& config);

// CSV with header scheme,h_max,rms_error,rms_std_error,h_mean,cpu_seconds,backstop_rate,divergent_count
void write_error_csv(std::ostream& out, const ErrorTable& table);
// CSV with header rho,prob,prob_std_error
void write_backstop_csv(std::ostream& out, std::span<const BackstopPoint> curve);
// CSV with header rho,n,count,mean_t,mean_h,var_h,backstop_hits
void write_profile_csv(std::ostream& out, std::span<const BackstopPoint> curve);

// Monte Carlo check of the Lévy-area moments against moment_constant: A_12 over
// unit-length windows (T = 1, m = 2) accumulated on a 2^-fine_exponent grid.
// Even orders pass when the sample moment is within 4 standard errors of I_b; odd
// orders when the sample mean is within 4 standard errors of 0 and the sample
// absolute moment does not exceed Ihat_b.
struct MomentCheck {
    int order = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    double exact = 0.0;
    double abs_estimate = 0.0;
    double abs_std_error = 0.0;
    double abs_bound = 0.0;
    bool passed = false;
};

std::vector<MomentCheck> levy_moment_check(int max_order, int samples, int fine_exponent = 12,
                                           std::uint64_t base_seed = kDefaultBaseSeed, int threads = 0);

// Evaluates body(i) for i in [0, count) on up to `threads` workers (0: hardware concurrency).
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace adamil
