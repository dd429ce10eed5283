#include <gtest/gtest.h>

#include "fpklab/measures.hpp"
#include "fpklab/nonlinear.hpp"
#include "oracles.hpp"

using namespace fpklab;

namespace {
const WeightFunction kW(1.0, 0.5);
const DiffusionSpec kA(1.0);
GridSpec grid512() { return GridSpec::make_1d(-12.0, 12.0, 512); }
}  // namespace

TEST(EvolveNonlinear, LinearLimitIsBitwiseIdenticalToFrozenDrift) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 256);
    const DensityField nu = make_gaussian_1d(g, 1.5, 0.5);
    SolveConfig cfg;
    cfg.horizon = 2.0;
    const DriftModel model = MeanFieldLinear{0.0, 0.0};
    const Trajectory nl = evolve_nonlinear(nu, model, kA, kW, cfg);
    const Trajectory lin = evolve_linear(nu, drift_field(model, nu), kA, kW, cfg);
    ASSERT_EQ(nl.snapshots.size(), lin.snapshots.size());
    for (size_t s = 0; s < nl.snapshots.size(); ++s)
        for (int i = 0; i < g.size(); ++i)
            ASSERT_EQ(nl.snapshots[s].values[i], lin.snapshots[s].values[i]);
}

TEST(EvolveNonlinear, RelaxingMeanFollowsTheClosedFormLaw) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.25);
    SolveConfig cfg;
    cfg.horizon = 5.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{0.5, 0.0}, kA, kW, cfg);
    const auto& mean = traj.channel("mean0");
    for (size_t i = 0; i < mean.size(); ++i) {
        const double expect = 2.0 * std::exp(-0.5 * traj.step_times[i]);
        EXPECT_NEAR(mean[i], expect, 0.02 * std::max(expect, 0.05));
    }
}

TEST(EvolveNonlinear, ConservedMeanSelectsTheLimit) {
    const GridSpec g = GridSpec::make_1d(-16.0, 16.0, 512);
    const DensityField nu = make_gaussian_1d(g, 1.0, 4.0);
    SolveConfig cfg;
    cfg.horizon = 8.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{1.0, 0.0}, kA, kW, cfg);
    for (double m : traj.channel("mean0")) EXPECT_NEAR(m, 1.0, 1e-3);
    EXPECT_LE(weighted_tv(traj.terminal(), make_gaussian_1d(g, 1.0, 1.0), kW), 2e-2);
}

TEST(EvolveNonlinear, SupercriticalMeanGrowsExponentially) {
    const GridSpec g = GridSpec::make_1d(-16.0, 16.0, 512);
    const DensityField nu = make_gaussian_1d(g, 1.0, 1.0);
    SolveConfig cfg;
    cfg.horizon = 3.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{1.5, 0.0}, kA, kW, cfg);
    const auto& mean = traj.channel("mean0");
    for (size_t i = 0; i < mean.size(); ++i)
        EXPECT_NEAR(mean[i], std::exp(0.5 * traj.step_times[i]), 0.03 * std::exp(0.5 * traj.step_times[i]));
}

TEST(EvolveNonlinear, RunawayScenarioTerminatesWithBlowUpReport) {
    const GridSpec g = GridSpec::make_1d(-16.0, 16.0, 256);
    const DensityField nu = make_gaussian_1d(g, 1.0, 1.0);
    SolveConfig cfg;
    cfg.horizon = 12.0;  // mean would reach ~400, far outside the box
    EXPECT_THROW(
        {
            try {
                evolve_nonlinear(nu, MeanFieldLinear{1.5, 0.0}, kA, kW, cfg);
            } catch (const BlowUpError& e) {
                EXPECT_GT(e.time, 0.0);
                throw;
            }
        },
        BlowUpError);
}

TEST(EvolveNonlinear, DriftRefreshLagIsConsistent) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.5);
    SolveConfig lag1;
    lag1.horizon = 3.0;
    SolveConfig lag4 = lag1;
    lag4.drift_refresh_lag = 4;
    const DriftModel model = MeanFieldLinear{0.5, 0.0};
    const Trajectory a = evolve_nonlinear(nu, model, kA, kW, lag1);
    const Trajectory b = evolve_nonlinear(nu, model, kA, kW, lag4);
    double sup = 0.0;
    for (size_t s = 0; s < a.snapshots.size(); ++s)
        sup = std::max(sup, weighted_tv(a.snapshots[s], b.snapshots[s], kW));
    EXPECT_LE(sup, 0.01);  // O(lag * dt)
}

TEST(EvolveNonlinear, DimensionMismatchRejected) {
    const GridSpec g2 = GridSpec::make_2d(-6.0, 6.0, 16, -6.0, 6.0, 16);
    const DensityField nu = make_gaussian(g2, Point{0.0, 0.0}, Point{0.5, 0.5});
    SolveConfig cfg;
    EXPECT_THROW(evolve_nonlinear(nu, MeanFieldLinear{0.5, 0.0}, kA, kW, cfg), DimensionUnsupportedError);
}

TEST(Picard, LinearProblemConvergesInOneSweep) {
    const GridSpec g = GridSpec::make_1d(-12.0, 12.0, 256);
    const DensityField nu = make_gaussian_1d(g, 1.0, 0.5);
    SolveConfig cfg;
    cfg.horizon = 2.0;
    const PicardResult res = picard_iterate(nu, MeanFieldLinear{0.0, 0.0}, kA, kW, cfg);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.sweeps, 1);
}

TEST(Picard, FrozenPathFixedPointMatchesPerStepSolution) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.25);
    SolveConfig cfg;
    cfg.horizon = 4.0;
    const DriftModel model = MeanFieldLinear{0.5, 0.0};
    const double tol = 2e-3;
    const PicardResult pic = picard_iterate(nu, model, kA, kW, cfg, 25, tol);
    EXPECT_TRUE(pic.converged);
    const Trajectory direct = evolve_nonlinear(nu, model, kA, kW, cfg);
    double sup = 0.0;
    for (size_t s = 0; s < direct.snapshots.size(); ++s)
        sup = std::max(sup, weighted_tv(direct.snapshots[s], pic.trajectory.snapshots[s], kW));
    EXPECT_LE(sup, 5.0 * tol);
}

TEST(Picard, ContractionFactorsScaleWithTheCoupling) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.5);
    SolveConfig cfg;
    cfg.horizon = 2.0;
    auto ratios = [&](double eps) {
        const PicardResult res = picard_iterate(nu, MeanFieldLinear{eps, 0.0}, kA, kW, cfg, 30, 1e-10);
        double acc = 0.0;
        int n = 0;
        for (size_t k = 1; k + 1 < res.contraction.size(); ++k) {
            acc += res.contraction[k + 1] / res.contraction[k];
            ++n;
        }
        return acc / n;
    };
    const double r02 = ratios(0.2), r04 = ratios(0.4);
    EXPECT_LT(r02, 0.35);
    EXPECT_GT(r04 / r02, 1.4);  // roughly proportional to the coupling strength
    EXPECT_LT(r04 / r02, 2.8);
}

TEST(Picard, AlternativeInitialPathReachesTheSameFixedPoint) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.25);
    SolveConfig cfg;
    cfg.horizon = 3.0;
    cfg.dt = 0.004;  // shared step grid for both starting paths
    const DriftModel model = MeanFieldLinear{0.5, 0.0};
    const double tol = 1e-4;
    const PicardResult from_constant = picard_iterate(nu, model, kA, kW, cfg, 40, tol);
    // seed the sweep with the solution of the decoupled linear problem
    std::vector<DensityField> linear_path;
    detail::evolve_core(nu, kA, kW, cfg,
                        [&](const DensityField&, double, VectorField& out) {
                            out = drift_field(MeanFieldLinear{0.0, 0.0}, nu);
                        },
                        &linear_path);
    const PicardResult from_linear = picard_iterate(nu, model, kA, kW, cfg, 40, tol, &linear_path);
    EXPECT_TRUE(from_constant.converged);
    EXPECT_TRUE(from_linear.converged);
    double sup = 0.0;
    for (size_t s = 0; s < from_constant.trajectory.snapshots.size(); ++s)
        sup = std::max(sup, weighted_tv(from_constant.trajectory.snapshots[s],
                                        from_linear.trajectory.snapshots[s], kW));
    EXPECT_LE(sup, 10.0 * tol);
}

TEST(Picard, ReportsContractionHistoryOnFailure) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.5);
    SolveConfig cfg;
    cfg.horizon = 2.0;
    EXPECT_THROW(picard_iterate(nu, MeanFieldLinear{0.5, 0.0}, kA, kW, cfg, 2, 1e-14), NoConvergenceError);
}

TEST(MomentBound, RelaxationEnvelopeHolds) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.25);
    SolveConfig cfg;
    cfg.horizon = 6.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{0.5, 0.0}, kA, kW, cfg);
    // validated constants for conserved-mean value 2: C = 3 + 4, Lambda = 1
    const auto margins = moment_bound_check(traj, 7.0, 1.0, 0.0);
    for (const auto& [t, m] : margins) EXPECT_GE(m, -1e-6);
}

TEST(MomentBound, NonexpandingCaseBoundsByInitialMoment) {
    const DensityField nu = make_gaussian_1d(GridSpec::make_1d(-16.0, 16.0, 512), 1.0, 4.0);
    SolveConfig cfg;
    cfg.horizon = 6.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{1.0, 0.0}, kA, kW, cfg);
    const auto margins = moment_bound_check(traj, 0.0, 1.0, 1.0);  // delta = 1 branch
    for (const auto& [t, m] : margins) EXPECT_GE(m, -1e-9);
}

TEST(MomentBound, UndersizedConstantsAreDetected) {
    const DensityField nu = make_gaussian_1d(grid512(), 2.0, 0.25);
    SolveConfig cfg;
    cfg.horizon = 6.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{0.5, 0.0}, kA, kW, cfg);
    // C below the asymptotic Lyapunov moment: the envelope must be crossed
    const auto margins = moment_bound_check(traj, 1.0, 1.0, 0.0);
    double worst = 0.0;
    for (const auto& [t, m] : margins) worst = std::min(worst, m);
    EXPECT_LT(worst, -0.1);
}

TEST(Trajectory, SnapshotsAreNormalizedAndMomentsFinite) {
    const DensityField nu = make_gaussian_1d(grid512(), 1.0, 0.5);
    SolveConfig cfg;
    cfg.horizon = 2.0;
    const Trajectory traj = evolve_nonlinear(nu, MeanFieldLinear{0.5, 0.0}, kA, kW, cfg);
    for (const auto& s : traj.snapshots) EXPECT_NEAR(s.mass(), 1.0, 1e-12);
    for (double v : traj.channel("v_moment")) EXPECT_TRUE(std::isfinite(v));
    for (double m : traj.channel("mass")) EXPECT_NEAR(m, 1.0, 1e-12);
}
