#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "adamil/adaptive.hpp"
#include "adamil/errors.hpp"

namespace {

using namespace adamil;

const double kHmax = std::ldexp(1.0, -8);

Vec scalar(double x) { return Vec::Constant(1, x); }

TEST(Strategy, ProposalExamples) {
    const auto cfg = StrategyConfig::make(kHmax, 16.0);
    EXPECT_EQ(cfg.delta, kHmax);

    const auto origin = propose_step(cfg, scalar(0.0));
    EXPECT_EQ(origin.h, kHmax);
    EXPECT_FALSE(origin.backstop);
    EXPECT_TRUE(std::isinf(origin.raw));

    EXPECT_EQ(propose_step(cfg, scalar(2.0)).h, std::ldexp(1.0, -9));
    EXPECT_EQ(propose_step(cfg, scalar(-0.5)).h, kHmax);

    const auto low = propose_step(cfg, scalar(17.0));
    EXPECT_TRUE(low.backstop);
    EXPECT_EQ(low.h, cfg.h_min());
    EXPECT_LT(low.raw, cfg.h_min());

    // raw == h_min exactly still counts as the backstop.
    EXPECT_TRUE(propose_step(cfg, scalar(16.0)).backstop);

    EXPECT_THROW(propose_step(cfg, scalar(std::numeric_limits<double>::infinity())), std::domain_error);
}

TEST(Strategy, Validation) {
    EXPECT_NO_THROW(StrategyConfig::make(kHmax, 16.0).validate(1.0));
    EXPECT_THROW(StrategyConfig::make(kHmax, 1.0).validate(1.0), ConfigError);
    EXPECT_THROW(StrategyConfig::make(2.0, 4.0).validate(1.0), ConfigError);
    EXPECT_THROW(StrategyConfig::make(kHmax, 4.0, 2.0 * kHmax).validate(1.0), ConfigError);
    EXPECT_THROW(StrategyConfig::make(kHmax, 4.0, 0.0).validate(1.0), ConfigError);
}

// Scalar problem that stays inside the unit ball: no drift, no noise.
SdeProblem resting(double x0) {
    return SdeProblem(
        "resting", 1, 1, [](const Vec& x) { return Vec::Zero(x.size()).eval(); },
        [](const Vec& x, int) { return Vec::Zero(x.size()).eval(); },
        [](const Vec& x, int) { return Mat::Zero(x.size(), x.size()).eval(); }, NoiseStructure::additive,
        scalar(x0), 1.0);
}

TEST(Adaptive, SmallStatesUseHmaxThroughout) {
    const auto path = WienerPath::generate(1, 12, 1, 1.0);
    const auto sol = integrate_adaptive(resting(0.75), StrategyConfig::make(kHmax, 4.0), path);
    EXPECT_EQ(sol.step_count, 256);
    EXPECT_EQ(sol.backstop_count, 0);
    EXPECT_EQ(sol.final_time, 1.0);
    EXPECT_EQ(sol.final_state(0), 0.75);
}

TEST(Adaptive, FirstStepIsHalfHmax) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto path = WienerPath::generate(2, 16, 1, 1.0);
    const auto sol = integrate_adaptive(p, StrategyConfig::make(kHmax, 16.0), path);
    ASSERT_GE(sol.times.size(), 2u);
    EXPECT_EQ(sol.raw_proposals.front(), kHmax / 2.0);
    EXPECT_EQ(sol.times[1], kHmax / 2.0);
}

struct MeshCase {
    BuiltinProblem problem;
    double rho;
    int fine;
};

class MeshInvariants : public ::testing::TestWithParam<MeshCase> {};

TEST_P(MeshInvariants, HoldOnEveryPath) {
    const auto c = GetParam();
    const auto p = make_builtin(c.problem);
    const auto cfg = StrategyConfig::make(kHmax, c.rho);
    const double h_ref = std::ldexp(p.horizon(), -c.fine);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto path = WienerPath::generate(seed, c.fine, p.dim_noise(), p.horizon());
        const auto sol = integrate_adaptive(p, cfg, path);
        ASSERT_FALSE(sol.divergent);
        ASSERT_EQ(sol.times.back(), p.horizon());
        ASSERT_EQ(static_cast<std::int64_t>(sol.backstop_flags.size()), sol.step_count);
        double sum = 0.0;
        for (std::int64_t n = 0; n < sol.step_count; ++n) {
            const auto k = static_cast<std::size_t>(n);
            const double h = sol.times[k + 1] - sol.times[k];
            ASSERT_GT(h, 0.0);
            sum += h;
            const bool backstop = sol.raw_proposals[k] <= cfg.h_min();
            ASSERT_EQ(sol.backstop_flags[k], backstop);
            if (!sol.clamped_flags[k]) {
                ASSERT_GE(h, cfg.h_min());
                ASSERT_LE(h, cfg.h_max);
                ASSERT_EQ(std::fmod(h, h_ref), 0.0);
                if (!backstop) {
                    ASSERT_LE(sol.states[k].norm(), c.rho);
                }
            } else {
                ASSERT_LE(h, cfg.h_max);
            }
        }
        ASSERT_NEAR(sum, p.horizon(), std::ldexp(p.horizon(), -52));
        ASSERT_EQ(sol.step_sum, sum);
    }
}

INSTANTIATE_TEST_SUITE_P(Builtins, MeshInvariants,
                         ::testing::Values(MeshCase{BuiltinProblem::scalar_mult, 16.0, 14},
                                           MeshCase{BuiltinProblem::scalar_probe, 2.0, 14},
                                           MeshCase{BuiltinProblem::twod_noncommutative, 4.0, 12}));

TEST(Adaptive, Deterministic) {
    const auto p = make_builtin(BuiltinProblem::twod_noncommutative);
    const auto path = WienerPath::generate(3, 12, 2, 1.0);
    const auto cfg = StrategyConfig::make(std::ldexp(1.0, -6), 4.0);
    const auto a = integrate_adaptive(p, cfg, path);
    const auto b = integrate_adaptive(p, cfg, path);
    ASSERT_EQ(a.times, b.times);
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        ASSERT_EQ(a.states[k], b.states[k]);
    }
}

TEST(Adaptive, SummaryWithoutTrajectory) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto path = WienerPath::generate(3, 14, 1, 1.0);
    const auto cfg = StrategyConfig::make(kHmax, 16.0);
    IntegrationOptions lean;
    lean.keep_trajectory = false;
    const auto a = integrate_adaptive(p, cfg, path);
    const auto b = integrate_adaptive(p, cfg, path, lean);
    EXPECT_TRUE(b.states.empty());
    EXPECT_EQ(a.final_state, b.final_state);
    EXPECT_EQ(a.step_count, b.step_count);
}

TEST(Adaptive, RejectsUnresolvableStrategy) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto path = WienerPath::generate(3, 8, 1, 1.0);
    EXPECT_ANY_THROW(integrate_adaptive(p, StrategyConfig::make(kHmax, 16.0), path));
}

TEST(Fixed, AdditiveMilsteinIsEulerTrajectory) {
    const auto p = make_builtin(BuiltinProblem::scalar_add);
    const auto path = WienerPath::generate(4, 12, 1, 1.0);
    const auto mil = integrate_fixed(p, Scheme::milstein, kHmax, path);
    const auto em = integrate_fixed(p, Scheme::euler, kHmax, path);
    ASSERT_EQ(mil.states.size(), 257u);
    for (std::size_t k = 0; k < mil.states.size(); ++k) {
        ASSERT_EQ(mil.states[k], em.states[k]);
    }
}

TEST(Fixed, SingleStepOfZeroProblem) {
    const auto path = WienerPath::generate(4, 4, 1, 1.0);
    const auto sol = integrate_fixed(resting(3.0), Scheme::milstein, 1.0, path);
    EXPECT_EQ(sol.step_count, 1);
    EXPECT_EQ(sol.final_state(0), 3.0);
}

TEST(Fixed, LastStepShortened) {
    const auto path = WienerPath::generate(4, 8, 1, 1.0);
    const auto sol = integrate_fixed(resting(0.0), Scheme::euler, 3.0 / 256.0, path);
    EXPECT_EQ(sol.step_count, 86);
    EXPECT_EQ(sol.times.back(), 1.0);
    EXPECT_TRUE(sol.clamped_flags.back());
}

TEST(Fixed, TamedAgreesWithMilsteinWhenTamingIsInactive) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const double h = std::ldexp(1.0, -12);
    const auto path = WienerPath::generate(5, 14, 1, 1.0);
    const auto mil = integrate_fixed(p, Scheme::milstein, h, path);
    // Taming moves each step by h f * h|f| / (1 + h|f|) <= h^2 f^2; the contracting
    // drift keeps the accumulated difference below the sum of those per-step shifts.
    double worst = 0.0;
    double shift = 0.0;
    for (const Vec& y : mil.states) {
        const double hf = h * p.drift(y).norm();
        worst = std::max(worst, hf);
        shift += hf * hf;
    }
    ASSERT_LT(worst, 2e-3);
    const auto tamed = integrate_fixed(p, Scheme::tamed, h, path);
    const double gap = (tamed.final_state - mil.final_state).norm();
    EXPECT_LT(gap, shift);
    EXPECT_GT(gap, 0.0);
}

TEST(Fixed, DivergenceIsMarked) {
    auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto path = WienerPath::generate(5, 4, 1, 1.0);
    SdeProblem far("far", 1, 1, [&p](const Vec& x) { return p.drift(x); },
                   [&p](const Vec& x, int i) { return p.diffusion_column(x, i); },
                   [&p](const Vec& x, int i) { return p.diffusion_jacobian(x, i); }, NoiseStructure::diagonal,
                   scalar(50.0), 1.0);
    const auto sol = integrate_fixed(far, Scheme::milstein, 1.0 / 16.0, path);
    EXPECT_TRUE(sol.divergent);
    EXPECT_TRUE(std::isfinite(sol.final_state(0)));
    const auto tamed = integrate_fixed(far, Scheme::tamed, 1.0 / 16.0, path);
    EXPECT_FALSE(tamed.divergent);
}

TEST(Adaptive, FourthMomentBoundedAcrossHmax) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const std::vector<int> exponents{8, 10, 12};
    std::vector<double> totals(exponents.size(), 0.0);
    std::vector<std::int64_t> counts(exponents.size(), 0);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto path = WienerPath::generate(seed, 16, 1, 1.0);
        for (std::size_t e = 0; e < exponents.size(); ++e) {
            const auto sol = integrate_adaptive(p, StrategyConfig::make(std::ldexp(1.0, -exponents[e]), 16.0), path);
            for (const Vec& y : sol.states) {
                totals[e] += std::pow(y.norm(), 4);
                ++counts[e];
            }
        }
    }
    std::vector<double> means;
    for (std::size_t e = 0; e < exponents.size(); ++e) {
        means.push_back(totals[e] / static_cast<double>(counts[e]));
    }
    const double lo = *std::min_element(means.begin(), means.end());
    const double hi = *std::max_element(means.begin(), means.end());
    EXPECT_LE(hi, 2.0 * lo);
}

TEST(Adaptive, CsvLayout) {
    const auto path = WienerPath::generate(1, 10, 1, 1.0);
    const auto sol = integrate_adaptive(resting(0.5), StrategyConfig::make(std::ldexp(1.0, -2), 2.0), path);
    std::ostringstream out;
    write_solution_csv(out, sol);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,y1,h,backstop");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

}  // namespace
