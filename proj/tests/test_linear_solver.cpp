#include <gtest/gtest.h>

#include <random>

#include "fpklab/linear_solver.hpp"
#include "fpklab/measures.hpp"
#include "oracles.hpp"

using namespace fpklab;

namespace {

const WeightFunction kW(1.0, 0.5);

VectorField constant_field(const GridSpec& g, double value) {
    VectorField f(g);
    for (double& v : f.comp[0]) v = value;
    return f;
}

VectorField linear_drift(const GridSpec& g, double slope, double shift = 0.0) {
    VectorField f(g);
    for (int i = 0; i < g.size(); ++i) {
        const Point p = g.cell_center(i);
        f.comp[0][i] = slope * p[0] + shift;
        if (g.dim == 2) f.comp[1][i] = slope * p[1] + shift;
    }
    return f;
}

VectorField cubic_drift(const GridSpec& g) {
    VectorField f(g);
    for (int i = 0; i < g.size(); ++i) {
        const double x = g.cell_center(i)[0];
        f.comp[0][i] = -x * x * x;
    }
    return f;
}

}  // namespace

TEST(StepLinear, PureDiffusionVarianceGrowth) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    DensityField rho = make_gaussian_1d(g, 0.0, 1.0);
    const VectorField b = constant_field(g, 0.0);
    SolveConfig cfg;
    const double dt = 1e-3, t_end = 0.5;
    for (int k = 0; k < static_cast<int>(t_end / dt); ++k) rho = step_linear(rho, b, DiffusionSpec(1.0), dt, cfg);
    EXPECT_NEAR(variance_axis(rho, 0), 1.0 + 2.0 * t_end, 0.02 * (1.0 + 2.0 * t_end));
}

TEST(StepLinear, StationaryProfileDoesNotDrift) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    const DensityField start = make_gaussian_1d(g, 0.0, 1.0);
    DensityField rho = start;
    const VectorField b = linear_drift(g, -1.0);
    SolveConfig cfg;
    const double dt = 2e-3;
    for (int k = 0; k < 500; ++k) rho = step_linear(rho, b, DiffusionSpec(1.0), dt, cfg);  // one time unit
    EXPECT_LE(weighted_tv(rho, start, kW), 1e-6);
}

TEST(StepLinear, RelaxingGaussianMatchesMomentFlow) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    DensityField rho = make_gaussian_1d(g, 2.0, 0.25);
    const VectorField b = linear_drift(g, -1.0);
    const double dt = 1e-3, t_end = 1.0;
    for (int k = 0; k < static_cast<int>(t_end / dt); ++k) rho = step_linear(rho, b, DiffusionSpec(1.0), dt, {});
    const oracle::OuFlow flow;
    EXPECT_NEAR(mean_axis(rho, 0), flow.mean(2.0, t_end), 0.01 * flow.mean(2.0, t_end));
    EXPECT_NEAR(variance_axis(rho, 0), flow.var(0.25, t_end), 0.01 * flow.var(0.25, t_end));
}

TEST(StepLinear, MassConservedToRoundoffAndPositive) {
    const GridSpec g = GridSpec::make_1d(-8.0, 8.0, 256);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DensityField rho(g);
    for (double& v : rho.values) v = u(rng) < 0.1 ? 10.0 * u(rng) : 0.0;  // spiky start
    rho = normalize(rho);
    const VectorField b = linear_drift(g, -1.0, 0.3);
    for (int k = 0; k < 100; ++k) {
        const double before = rho.mass();
        rho = step_linear(rho, b, DiffusionSpec(1.0), 5e-3, {});
        EXPECT_NEAR(rho.mass(), before, 1e-14 * std::max(1.0, before));
        for (double v : rho.values) ASSERT_GE(v, 0.0);
    }
}

TEST(StepLinear, ExplicitStabilityBoundEnforced) {
    const GridSpec g = GridSpec::make_1d(-8.0, 8.0, 128);
    const DensityField rho = make_gaussian_1d(g, 0.0, 1.0);
    const VectorField b = linear_drift(g, -1.0);
    SolveConfig cfg;
    cfg.stepping = TimeStepping::Explicit;
    const double bound = explicit_dt_bound(g, DiffusionSpec(1.0));
    EXPECT_THROW(step_linear(rho, b, DiffusionSpec(1.0), 2.0 * bound, cfg), StabilityViolationError);
    EXPECT_NO_THROW(step_linear(rho, b, DiffusionSpec(1.0), 0.5 * bound, cfg));
}

TEST(StepLinear, ExplicitAgreesWithImplicitLoosely) {
    const GridSpec g = GridSpec::make_1d(-10.0, 10.0, 256);
    const DensityField start = make_gaussian_1d(g, 1.0, 0.5);
    const VectorField b = linear_drift(g, -1.0);
    SolveConfig ex;
    ex.stepping = TimeStepping::Explicit;
    const double dt = 0.4 * explicit_dt_bound(g, DiffusionSpec(1.0));
    DensityField a = start, c = start;
    for (int k = 0; k < 200; ++k) {
        a = step_linear(a, b, DiffusionSpec(1.0), dt, ex);
        c = step_linear(c, b, DiffusionSpec(1.0), dt, {});
    }
    EXPECT_LE(total_variation(a, c), 1e-3);
}

TEST(StepLinear, DiscreteDualityAgainstGenerator) {
    // <rho_{n+1} - rho_n, phi> / dt equals <rho, a phi'' + b phi'> up to
    // O(h^2 + dt) for smooth test functions supported away from the boundary
    const GridSpec g = GridSpec::make_1d(-10.0, 10.0, 512);
    const double h = g.h(0);
    const DensityField rho = make_gaussian_1d(g, 0.5, 1.2);
    const VectorField b = linear_drift(g, -1.0, 0.2);
    const double dt = 1e-4;
    const DensityField next = step_linear(rho, b, DiffusionSpec(1.0), dt, {});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uc(-4.0, 4.0), uw(0.8, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double c = uc(rng), wdt = uw(rng);
        auto phi = [&](double x) { return std::exp(-0.5 * (x - c) * (x - c) / (wdt * wdt)); };
        auto dphi = [&](double x) { return -(x - c) / (wdt * wdt) * phi(x); };
        auto d2phi = [&](double x) {
            return ((x - c) * (x - c) / (wdt * wdt) - 1.0) / (wdt * wdt) * phi(x);
        };
        long double lhs = 0.0L, rhs = 0.0L;
        for (int i = 0; i < g.size(); ++i) {
            const double x = g.center(0, i);
            lhs += (next.values[i] - rho.values[i]) / dt * phi(x);
            rhs += rho.values[i] * (d2phi(x) + b.comp[0][i] * dphi(x));
        }
        const double err = std::fabs(static_cast<double>(lhs - rhs)) * h;
        EXPECT_LE(err, 50.0 * (h * h + dt));
    }
}

TEST(EvolveLinear, ZeroHorizonKeepsInitial) {
    const GridSpec g = GridSpec::make_1d(-8.0, 8.0, 128);
    const DensityField rho0 = make_gaussian_1d(g, 0.5, 1.0);
    SolveConfig cfg;
    cfg.horizon = 0.0;
    const Trajectory t = evolve_linear(rho0, linear_drift(g, -1.0), DiffusionSpec(1.0), kW, cfg);
    ASSERT_EQ(t.snapshots.size(), 1u);
    EXPECT_LE(weighted_tv(t.snapshots[0], rho0, kW), 1e-14);
}

TEST(EvolveLinear, RelaxationToStationaryProfile) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    const DensityField rho0 = make_gaussian_1d(g, 2.0, 0.25);
    SolveConfig cfg;
    cfg.horizon = 10.0;
    const Trajectory t = evolve_linear(rho0, linear_drift(g, -1.0), DiffusionSpec(1.0), kW, cfg);
    EXPECT_LE(weighted_tv(t.terminal(), make_gaussian_1d(g, 0.0, 1.0), kW), 1e-3);
    // recorded channels stay sane
    for (double m : t.channel("mass")) EXPECT_NEAR(m, 1.0, 1e-12);
}

TEST(EvolveLinear, GradientDriftReachesGibbsProfile) {
    // b = -x^3: the stationary profile is proportional to exp(-x^4/4)
    const GridSpec g = GridSpec::make_1d(-6.0, 6.0, 256);
    const DensityField rho0 = make_gaussian_1d(g, 0.0, 1.0);
    SolveConfig cfg;
    cfg.horizon = 12.0;
    cfg.snapshot_stride = 1.0;
    const Trajectory t = evolve_linear(rho0, cubic_drift(g), DiffusionSpec(1.0), kW, cfg);
    const double z = oracle::integrate([](double x) { return std::exp(-0.25 * x * x * x * x); }, -6.0, 6.0);
    double sup = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double x = g.center(0, i);
        sup = std::max(sup, std::fabs(t.terminal().values[i] - std::exp(-0.25 * x * x * x * x) / z));
    }
    EXPECT_LE(sup, 1e-3);
}

TEST(SolveStationary, ConfiningLinearDriftGivesUnitGaussian) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    SolveConfig cfg;
    const DensityField rho = solve_linear_stationary(linear_drift(g, -1.0), DiffusionSpec(1.0), cfg, kW);
    const DensityField ref = make_gaussian_1d(g, 0.0, 1.0);
    double sup = 0.0;
    for (int i = 0; i < g.size(); ++i) sup = std::max(sup, std::fabs(rho.values[i] - ref.values[i]));
    EXPECT_LE(sup, 1e-3);
}

TEST(SolveStationary, ShiftEquivariance) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    SolveConfig cfg;
    const DensityField rho = solve_linear_stationary(linear_drift(g, -1.0, 0.7), DiffusionSpec(1.0), cfg, kW);
    EXPECT_LE(weighted_tv(rho, make_gaussian_1d(g, 0.7, 1.0), kW), 1e-6);
}

TEST(SolveStationary, GibbsFormForGradientDrift) {
    const GridSpec g = GridSpec::make_1d(-6.0, 6.0, 320);
    SolveConfig cfg;
    const DensityField rho = solve_linear_stationary(cubic_drift(g), DiffusionSpec(1.0), cfg, kW);
    const double z = oracle::integrate([](double x) { return std::exp(-0.25 * x * x * x * x); }, -6.0, 6.0);
    double sup = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double x = g.center(0, i);
        sup = std::max(sup, std::fabs(rho.values[i] - std::exp(-0.25 * x * x * x * x) / z));
    }
    EXPECT_LE(sup, 1e-3);
}

TEST(SolveStationary, DirectAndLongTimeAgree) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 256);
    const VectorField b = linear_drift(g, -1.0, 0.4);
    SolveConfig direct;
    SolveConfig lt;
    lt.stationary_mode = StationaryMode::LongTime;
    lt.stationary_tol = 1e-9;
    const DensityField a = solve_linear_stationary(b, DiffusionSpec(1.0), direct, kW);
    const DensityField c = solve_linear_stationary(b, DiffusionSpec(1.0), lt, kW);
    EXPECT_LE(weighted_tv(a, c, kW), 10.0 * lt.stationary_tol);
}

TEST(SolveStationary, RejectsNonConfiningDrift) {
    const GridSpec g = GridSpec::make_1d(-8.0, 8.0, 128);
    SolveConfig cfg;
    EXPECT_THROW(solve_linear_stationary(linear_drift(g, +1.0), DiffusionSpec(1.0), cfg, kW),
                 NotConfiningError);
}

TEST(SolveStationary, UpwindCrossCheckAgreesCoarsely) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 512);
    SolveConfig cc;
    SolveConfig uw;
    uw.scheme = Scheme::ExponentialUpwind;
    const VectorField b = linear_drift(g, -1.0);
    const DensityField a = solve_linear_stationary(b, DiffusionSpec(1.0), cc, kW);
    const DensityField c = solve_linear_stationary(b, DiffusionSpec(1.0), uw, kW);
    const double d = weighted_tv(a, c, kW);
    EXPECT_GT(d, 1e-6);  // genuinely different discretizations
    EXPECT_LT(d, 0.05);  // but consistent
}

TEST(SolveStationary, SecondOrderSpatialConvergenceOnRelaxingProfile) {
    // transient benchmark: one relaxation time from a displaced narrow
    // start, compared against the closed-form Gaussian moment flow
    const oracle::OuFlow flow;
    const double t_end = 1.0;
    auto sup_error = [&](int cells) {
        const GridSpec g = GridSpec::make_1d(-12.0, 12.0, cells);
        DensityField rho = make_gaussian_1d(g, 2.0, 0.25);
        SolveConfig cfg;
        const double dt = 0.05 * g.h(0) * g.h(0);  // keep the time error subordinate
        const int steps = static_cast<int>(std::lround(t_end / dt));
        const VectorField b = linear_drift(g, -1.0);
        for (int k = 0; k < steps; ++k) rho = step_linear(rho, b, DiffusionSpec(1.0), dt, cfg);
        const DensityField ref = make_gaussian_1d(g, flow.mean(2.0, t_end), flow.var(0.25, t_end));
        double sup = 0.0;
        for (int i = 0; i < g.size(); ++i) sup = std::max(sup, std::fabs(rho.values[i] - ref.values[i]));
        return sup;
    };
    const double e1 = sup_error(128);
    const double e2 = sup_error(256);
    const double ratio = e1 / e2;
    EXPECT_GE(ratio, 3.2);
    EXPECT_LE(ratio, 4.8);
}

TEST(Solver2d, ProductStationaryProfile) {
    const GridSpec g = GridSpec::make_2d(-6.0, 6.0, 64, -6.0, 6.0, 64);
    VectorField b(g);
    for (int i = 0; i < g.size(); ++i) {
        const Point p = g.cell_center(i);
        b.comp[0][i] = -2.0 * p[0];
        b.comp[1][i] = -2.0 * p[1];
    }
    SolveConfig cfg;
    const DensityField rho = solve_linear_stationary(b, DiffusionSpec(1.0), cfg, kW);
    const DensityField ref = make_gaussian(g, Point{0.0, 0.0}, Point{0.5, 0.5});
    double sup = 0.0;
    for (int i = 0; i < g.size(); ++i) sup = std::max(sup, std::fabs(rho.values[i] - ref.values[i]));
    EXPECT_LE(sup, 1e-3);
}

TEST(Solver2d, StrangSplitEvolutionConservesMassAndRelaxes) {
    const GridSpec g = GridSpec::make_2d(-6.0, 6.0, 64, -6.0, 6.0, 64);
    VectorField b(g);
    for (int i = 0; i < g.size(); ++i) {
        const Point p = g.cell_center(i);
        b.comp[0][i] = -2.0 * p[0];
        b.comp[1][i] = -2.0 * p[1];
    }
    const DensityField rho0 = make_gaussian(g, Point{1.0, -0.5}, Point{0.5, 0.5});
    SolveConfig cfg;
    cfg.horizon = 4.0;
    const Trajectory t = evolve_linear(rho0, b, DiffusionSpec(1.0), kW, cfg);
    for (double m : t.channel("mass")) EXPECT_NEAR(m, 1.0, 1e-12);
    EXPECT_LE(weighted_tv(t.terminal(), make_gaussian(g, Point{0.0, 0.0}, Point{0.5, 0.5}), kW), 1e-3);
}
