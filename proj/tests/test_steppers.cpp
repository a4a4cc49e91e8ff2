#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adamil/errors.hpp"
#include "adamil/steppers.hpp"
#include "adamil/wiener.hpp"

namespace {

using namespace adamil;

Vec scalar(double x) { return Vec::Constant(1, x); }

// Integrals of a single scalar step with the given h and dW.
IteratedIntegrals scalar_integrals(double h, double dw) {
    IteratedIntegrals ii;
    ii.h = h;
    ii.dW = scalar(dw);
    ii.I = Mat::Constant(1, 1, 0.5 * (dw * dw - h));
    ii.A = Mat::Zero(1, 1);
    return ii;
}

SdeProblem zero_problem(int d, int m) {
    return SdeProblem(
        "zero", d, m, [d](const Vec&) { return Vec::Zero(d).eval(); },
        [d](const Vec&, int) { return Vec::Zero(d).eval(); }, [d](const Vec&, int) { return Mat::Zero(d, d).eval(); },
        NoiseStructure::additive, Vec::Zero(d), 1.0);
}

// Step assembled from the component form: symmetric products times dW_i dW_j / 2,
// the diagonal (dW^2 - h)/2 terms and the antisymmetric products times A.
Vec component_form_step(const SdeProblem& p, const Vec& x, const IteratedIntegrals& ii) {
    const int m = p.dim_noise();
    Vec y = x + ii.h * p.drift(x);
    for (int i = 0; i < m; ++i) {
        y += p.diffusion_column(x, i) * ii.dW(i);
    }
    for (int i = 0; i < m; ++i) {
        const Vec gi = p.diffusion_column(x, i);
        const Mat Di = p.diffusion_jacobian(x, i);
        y += Di * gi * 0.5 * (ii.dW(i) * ii.dW(i) - ii.h);
        for (int j = i + 1; j < m; ++j) {
            const Vec gj = p.diffusion_column(x, j);
            const Mat Dj = p.diffusion_jacobian(x, j);
            const Vec sym = Di * gj + Dj * gi;  // coefficient of I(j,i) + I(i,j)
            const Vec anti = Di * gj - Dj * gi;
            y += 0.5 * sym * ii.dW(i) * ii.dW(j);
            // I(j,i) = dWi dWj / 2 - A(i,j)
            y -= anti * ii.A(i, j);
        }
    }
    return y;
}

TEST(Steppers, ZeroCoefficientsGiveIdentity) {
    const auto p = zero_problem(2, 2);
    const auto path = WienerPath::generate(1, 6, 2, 1.0);
    const auto ii = integrals_over(path, 0, 64);
    Vec x(2);
    x << 1.5, -0.25;
    const StepInput in{x, ii};
    EXPECT_EQ(milstein_step(p, in), x);
    EXPECT_EQ(tamed_milstein_step(p, in), x);
    EXPECT_EQ(euler_maruyama_step(p, in), x);
}

TEST(Steppers, HandEvaluatedMilstein) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto ii = scalar_integrals(0.25, 0.1);
    ASSERT_DOUBLE_EQ(ii.I(0, 0), -0.12);
    const Vec x = scalar(2.0);
    EXPECT_NEAR(milstein_step(p, {x, ii})(0), 0.4752, 1e-14);
    EXPECT_NEAR(euler_maruyama_step(p, {x, ii})(0), 0.48, 1e-14);
}

TEST(Steppers, TamedDriftIncrement) {
    SdeProblem drift_only(
        "drift_only", 1, 1, [](const Vec& x) { return (x - x.array().cube().matrix()).eval(); },
        [](const Vec&, int) { return Vec::Zero(1).eval(); }, [](const Vec&, int) { return Mat::Zero(1, 1).eval(); },
        NoiseStructure::additive, scalar(2.0), 1.0);
    const auto ii = scalar_integrals(1.0, 0.0);
    EXPECT_NEAR(tamed_milstein_step(drift_only, {scalar(2.0), ii})(0) - 2.0, -6.0 / 7.0, 1e-15);
}

TEST(Steppers, TamingBound) {
    const auto p = make_builtin(BuiltinProblem::twod_noncommutative);
    std::mt19937_64 rng(kPropertySeed);
    std::uniform_real_distribution<double> coord(-50.0, 50.0);
    std::uniform_real_distribution<double> log_h(-20.0, 2.0);
    IteratedIntegrals ii;
    ii.dW = Vec::Zero(2);
    ii.I = Mat::Zero(2, 2);
    ii.A = Mat::Zero(2, 2);
    for (int trial = 0; trial < 10000; ++trial) {
        Vec x(2);
        x << coord(rng), coord(rng);
        ii.h = std::exp2(log_h(rng));
        // With dW = 0 and I = 0 only the tamed drift moves the state.
        const double hf = ii.h * p.drift(x).norm();
        const double moved = (tamed_milstein_step(p, {x, ii}) - x).norm();
        ASSERT_LT(moved, std::min(1.0, hf) * (1.0 + 1e-12) + 1e-12 * x.norm());
    }
}

TEST(Steppers, AdditiveNoiseMilsteinIsEuler) {
    const auto p = make_builtin(BuiltinProblem::scalar_add);
    const auto path = WienerPath::generate(4, 8, 1, 1.0);
    for (std::int64_t k = 0; k < 256; k += 16) {
        const auto ii = integrals_over(path, k, k + 16);
        const Vec x = scalar(0.1 * static_cast<double>(k) - 3.0);
        EXPECT_EQ(milstein_step(p, {x, ii}), euler_maruyama_step(p, {x, ii}));
    }
}

TEST(Steppers, BackstopDelegatesToTamed) {
    const auto p = make_builtin(BuiltinProblem::twod_noncommutative);
    const auto path = WienerPath::generate(5, 8, 2, 1.0);
    const auto ii = integrals_over(path, 10, 42);
    const Vec x = p.initial_state();
    EXPECT_EQ(backstop_step(p, {x, ii}), tamed_milstein_step(p, {x, ii}));
    EXPECT_EQ(comparator_step(Scheme::tamed, p, {x, ii}), tamed_milstein_step(p, {x, ii}));
    EXPECT_EQ(comparator_step(Scheme::milstein, p, {x, ii}), milstein_step(p, {x, ii}));
    EXPECT_THROW(comparator_step(Scheme::adaptive, p, {x, ii}), ConfigError);
}

TEST(Steppers, HandEvaluatedBackstop) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const double h = std::ldexp(1.0, -12);
    const auto ii = scalar_integrals(h, 0.0);
    ASSERT_EQ(ii.I(0, 0), -std::ldexp(1.0, -13));
    const double expected = 2.0 + h * (-6.0) / (1.0 + h * 6.0) + 0.04 * -std::ldexp(1.0, -13);
    EXPECT_NEAR(backstop_step(p, {scalar(2.0), ii})(0), expected, 1e-15);
}

TEST(Steppers, AdditiveBackstopIsTamedEuler) {
    const auto p = make_builtin(BuiltinProblem::scalar_add);
    const auto ii = scalar_integrals(0.5, 0.3);
    const Vec x = scalar(2.0);
    const double f = p.drift(x)(0);
    const double expected = 2.0 + 0.5 * f / (1.0 + 0.5 * std::abs(f)) + p.diffusion_column(x, 0)(0) * 0.3;
    EXPECT_NEAR(backstop_step(p, {x, ii})(0), expected, 1e-15);
}

TEST(Steppers, CommutativeNoiseIgnoresArea) {
    for (auto b : {BuiltinProblem::twod_commutative, BuiltinProblem::twod_diagonal}) {
        const auto p = make_builtin(b);
        const auto path = WienerPath::generate(6, 10, 2, 1.0);
        const auto pts = sample_points(2, 50);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto ii = integrals_over(path, static_cast<std::int64_t>(k), static_cast<std::int64_t>(k) + 64);
            const Vec full = milstein_step(p, {pts[k], ii});
            const Vec zeroed = milstein_step(p, {pts[k], ii.without_levy_area()});
            EXPECT_LE((full - zeroed).norm(), 1e-12 * (1.0 + full.norm())) << to_string(b);
        }
    }
}

TEST(Steppers, NonCommutativeNoiseUsesArea) {
    const auto p = make_builtin(BuiltinProblem::twod_noncommutative);
    const auto path = WienerPath::generate(6, 10, 2, 1.0);
    const auto ii = integrals_over(path, 0, 512);
    ASSERT_NE(ii.A(0, 1), 0.0);
    const Vec x = p.initial_state();
    EXPECT_GT((milstein_step(p, {x, ii}) - milstein_step(p, {x, ii.without_levy_area()})).norm(), 1e-6);
}

TEST(Steppers, ComponentFormMatchesDirectAssembly) {
    for (auto b : all_builtins()) {
        const auto p = make_builtin(b);
        const auto path = WienerPath::generate(9, 10, p.dim_noise(), p.horizon());
        const auto pts = sample_points(p.dim_state(), 100);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto start = static_cast<std::int64_t>(7 * k);
            const auto ii = integrals_over(path, start, start + 32);
            const Vec direct = milstein_step(p, {pts[k], ii});
            const Vec oracle = component_form_step(p, pts[k], ii);
            EXPECT_LE((direct - oracle).norm(), 1e-12 * (1.0 + oracle.norm())) << to_string(b);
        }
    }
}

TEST(Steppers, OverflowIsSignalled) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto ii = scalar_integrals(1.0, 0.0);
    EXPECT_THROW(milstein_step(p, {scalar(1e120), ii}), OverflowError);
}

TEST(Steppers, ProjectionPassesSmallStates) {
    const auto p = make_builtin(BuiltinProblem::scalar_mult);
    const auto ii = scalar_integrals(std::ldexp(1.0, -8), 0.01);
    // radius h^-1/4 = 4
    const Vec small = scalar(2.0);
    EXPECT_EQ(pmil_projection(small, ii.h, 0.25), small);
    EXPECT_EQ(comparator_step(Scheme::pmil, p, {small, ii}), milstein_step(p, {small, ii}));
    EXPECT_NEAR(pmil_projection(scalar(-10.0), ii.h, 0.25)(0), -4.0, 1e-15);
}

TEST(Steppers, ImplicitSolveOnLinearDriftTakesOneIteration) {
    const double lambda = -3.0;
    SdeProblem linear(
        "linear", 1, 1, [lambda](const Vec& x) { return (lambda * x).eval(); },
        [](const Vec&, int) { return Vec::Constant(1, 0.2); }, [](const Vec&, int) { return Mat::Zero(1, 1).eval(); },
        NoiseStructure::additive, scalar(1.0), 1.0, [lambda](const Vec&) { return Mat::Constant(1, 1, lambda); });
    const double h = 0.25;
    const auto solve = solve_drift_implicit(linear, scalar(2.0), h);
    EXPECT_LE(solve.iterations, 1);
    // Closed form y = x / (1 - h lambda).
    EXPECT_NEAR(solve.value(0), 2.0 / (1.0 - h * lambda), 1e-14);
    const double residual = solve.value(0) - 2.0 - h * lambda * solve.value(0);
    EXPECT_LT(std::abs(residual), 1e-13);
}

TEST(Steppers, ImplicitSolveReportsFailure) {
    const auto p = make_builtin(BuiltinProblem::scalar_add);
    ComparatorOptions opts;
    opts.newton_max_iterations = 1;
    opts.newton_tolerance = 0.0;
    try {
        solve_drift_implicit(p, scalar(5.0), 0.5, opts);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_FALSE(e.residual_trace().empty());
    }
}

TEST(Steppers, SchemeNames) {
    for (auto s : {Scheme::adaptive, Scheme::milstein, Scheme::tamed, Scheme::euler, Scheme::pmil, Scheme::ssbm}) {
        EXPECT_EQ(parse_scheme(to_string(s)), s);
    }
    EXPECT_THROW(parse_scheme("rk4"), ConfigError);
}

}  // namespace
