#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fpklab/drift.hpp"
#include "fpklab/linear_solver.hpp"
#include "fpklab/trajectory.hpp"

namespace fpklab {

/// Solve the nonlinear Cauchy problem: the drift is reassembled from the
/// current solution every drift_refresh_lag steps (default every step).
inline Trajectory evolve_nonlinear(const DensityField& nu, const DriftModel& model, const DiffusionSpec& a,
                                   const WeightFunction& w, const SolveConfig& cfg) {
    if (model_dim(model) != nu.grid.dim)
        throw DimensionUnsupportedError("evolve_nonlinear: model dimension does not match grid");
    return detail::evolve_core(nu, a, w, cfg, [&model](const DensityField& mu, double, VectorField& out) {
        out = drift_field(model, mu);
    });
}

struct PicardResult {
    Trajectory trajectory;
    int sweeps = 0;
    std::vector<double> contraction;  // sup_t W-distance between successive sweeps
    bool converged = false;
};

/// Frozen-path fixed-point construction of the same Cauchy problem: each
/// sweep solves the linear problem along the previous sweep's path, until
/// successive paths agree in sup_t weighted TV. Independent cross-check of
/// evolve_nonlinear (their discrete fixed points coincide).
inline PicardResult picard_iterate(const DensityField& nu, const DriftModel& model, const DiffusionSpec& a,
                                   const WeightFunction& w, const SolveConfig& cfg, int max_sweeps = 25,
                                   double tol = 2e-3,
                                   const std::vector<DensityField>* initial_path = nullptr) {
    PicardResult res;
    const DensityField nu0 = normalize(nu);

    // sweep 0 is the constant-in-time path sigma_t = nu, unless a starting
    // path (for instance the decoupled linear solution) is supplied
    double path_dt =
        effective_dt(cfg, cfg.dt > 0.0 ? cfg.dt : default_dt(nu.grid, drift_field(model, nu0)));
    std::vector<DensityField> prev_path;
    if (initial_path) prev_path = *initial_path;
    Trajectory traj;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        std::vector<DensityField> new_path;
        auto provider = [&](const DensityField&, double t, VectorField& out) {
            if (prev_path.empty()) {
                out = drift_field(model, nu0);
            } else {
                const size_t idx =
                    std::min(prev_path.size() - 1, static_cast<size_t>(std::lround(t / path_dt)));
                out = drift_field(model, prev_path[idx]);
            }
        };
        traj = detail::evolve_core(nu0, a, w, cfg, provider, &new_path);
        path_dt = traj.dt;
        if (!prev_path.empty()) {
            if (prev_path.size() != new_path.size())
                throw Error("picard_iterate: supplied initial path has the wrong step count");
            double sup = 0.0;
            for (size_t i = 0; i < new_path.size(); ++i)
                sup = std::max(sup, weighted_tv(new_path[i], prev_path[i], w));
            res.contraction.push_back(sup);
            if (sup < tol) {
                res.sweeps = sweep - 1;  // previous sweep already carried the fixed point
                res.converged = true;
                res.trajectory = traj;
                return res;
            }
        }
        prev_path = std::move(new_path);
        res.sweeps = sweep;
        if (measure_independent(model)) {  // linear problem: one sweep is exact
            res.converged = true;
            res.trajectory = traj;
            return res;
        }
    }
    res.trajectory = traj;
    std::string hist;
    for (double c : res.contraction) hist += " " + std::to_string(c);
    throw NoConvergenceError("picard_iterate: no convergence after " + std::to_string(max_sweeps) +
                             " sweeps; contraction history:" + hist);
}

/// Gronwall moment envelope: for validated drift constants (C, Lambda, delta),
///   integral of V d mu_t <= (V0 - C/Lambda) e^{-Lambda (1-delta) t} + C/Lambda
/// for delta < 1, and V0 itself for delta = 1. Returns bound minus measured
/// moment per recorded step; nonnegative margins validate the constants.
inline std::vector<std::pair<double, double>> moment_bound_check(const Trajectory& traj, double C, double Lambda,
                                                                 double delta) {
    if (traj.step_times.empty()) throw EmptyTrajectoryError("moment_bound_check: empty trajectory");
    const auto& vm = traj.channel("v_moment");
    const double v0 = vm.front();
    std::vector<std::pair<double, double>> margins;
    margins.reserve(vm.size());
    for (size_t i = 0; i < vm.size(); ++i) {
        const double t = traj.step_times[i];
        double bound;
        if (delta >= 1.0) {
            bound = v0;
        } else {
            const double ratio = C / Lambda;
            bound = (v0 - ratio) * std::exp(-Lambda * (1.0 - delta) * t) + ratio;
        }
        margins.emplace_back(t, bound - vm[i]);
    }
    return margins;
}

}  // namespace fpklab
