#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpklab/drift.hpp"
#include "fpklab/functions.hpp"
#include "fpklab/linear_solver.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/nonlinear.hpp"

namespace fpklab {

/// Constraint mu(h) = target selecting a stationary branch.
struct Constraint {
    ScalarFunction h;
    double target = 0.0;
};

struct StationaryOptions {
    double tol = 1e-9;
    int max_iterations = 60;
    double damping = 1.0;  // 1 = undamped iteration on the solution map
    std::optional<Constraint> constraint;
    double projection_tol = 1e-12;
};

struct StationaryResult {
    DensityField density;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;
    std::vector<double> constraint_history;  // mu(h) per iterate (mean0 when unconstrained)
    double v_moment = 0.0;
    std::map<std::string, double> constraint_values;
};

/// The solution map: sigma goes to the stationary solution of the linear
/// equation with drift b(., sigma). Nonlinear stationary measures are its
/// fixed points.
inline DensityField t_map(const DensityField& sigma, const DriftModel& model, const DiffusionSpec& a,
                          const SolveConfig& cfg, const WeightFunction& w = WeightFunction()) {
    const VectorField b = drift_field(model, sigma);
    return solve_linear_stationary(b, a, cfg, w, &sigma);
}

namespace detail {

/// Exponential tilt restoring mu(h) = target: multiplies the density by
/// exp(c (h - mean)) with c found by a safeguarded Newton iteration. The
/// tilt parameter is tiny in practice (it corrects discretization drift of
/// the conserved functional).
inline DensityField project_constraint(const DensityField& mu, const Constraint& con, double tol) {
    const int n = mu.grid.size();
    std::vector<double> hv(n);
    for (int i = 0; i < n; ++i) hv[i] = con.h(mu.grid.cell_center(i));
    const double target = con.target;

    auto tilted = [&](double c) {
        DensityField out = mu;
        for (int i = 0; i < n; ++i) {
            const double arg = std::min(500.0, std::max(-500.0, c * (hv[i] - target)));
            out.values[i] *= std::exp(arg);
        }
        return normalize(out);
    };
    auto moment_of = [&](const DensityField& f) {
        long double s = 0.0L;
        for (int i = 0; i < n; ++i) s += hv[i] * f.values[i];
        return static_cast<double>(s) * f.grid.cell_volume();
    };

    double c = 0.0;
    DensityField cur = mu;
    for (int it = 0; it < 60; ++it) {
        const double m = moment_of(cur);
        if (std::fabs(m - target) <= tol) return cur;
        // Newton step: d moment / d c is the tilted variance of h
        long double m2 = 0.0L;
        for (int i = 0; i < n; ++i) m2 += hv[i] * hv[i] * cur.values[i];
        const double var = static_cast<double>(m2) * cur.grid.cell_volume() - m * m;
        if (!(var > 0.0)) throw NoConvergenceError("constraint projection: degenerate tilt variance");
        double step = (target - m) / var;
        step = std::min(1.0, std::max(-1.0, step));
        c += step;
        cur = tilted(c);
    }
    throw NoConvergenceError("constraint projection: tilt did not reach the target moment");
}

}  // namespace detail

/// Fixed point of the solution map by (optionally damped) iteration with
/// renormalization and per-iteration constraint re-projection. Non-convergence
/// is an expected outcome for models without stationary solutions; it is
/// reported through the converged flag and the residual history.
inline StationaryResult find_stationary(const DriftModel& model, const DiffusionSpec& a, const WeightFunction& w,
                                        const SolveConfig& cfg, const StationaryOptions& opts,
                                        const DensityField& guess) {
    StationaryResult res;
    DensityField mu = normalize(guess);
    if (opts.constraint) mu = detail::project_constraint(mu, *opts.constraint, opts.projection_tol);

    double damping = opts.damping;
    int rising = 0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const DensityField mapped = t_map(mu, model, a, cfg, w);
        const double residual = weighted_tv(mapped, mu, w);
        res.residual_history.push_back(residual);
        res.constraint_history.push_back(opts.constraint
                                             ? integrate_functional(mu, [&](const Point& p) { return opts.constraint->h(p); })
                                             : mean_axis(mu, 0));
        DensityField next = damping >= 1.0 ? normalize(mapped) : blend(mu, mapped, damping);
        if (opts.constraint) next = detail::project_constraint(next, *opts.constraint, opts.projection_tol);
        mu = std::move(next);
        res.iterations = it;
        if (residual < opts.tol) {
            res.converged = true;
            break;
        }
        const size_t k = res.residual_history.size();
        if (k >= 3 && res.residual_history[k - 1] > 1.001 * res.residual_history[k - 2] &&
            res.residual_history[k - 2] > 1.001 * res.residual_history[k - 3]) {
            if (++rising == 1) damping = 0.5;  // widen the basin on oscillation
        }
    }
    res.density = mu;
    res.residual = res.residual_history.empty() ? 0.0 : res.residual_history.back();
    res.v_moment = v_moment(mu, w);
    if (opts.constraint)
        res.constraint_values["h"] =
            integrate_functional(mu, [&](const Point& p) { return opts.constraint->h(p); });
    res.constraint_values["mean0"] = mean_axis(mu, 0);
    if (mu.grid.dim == 2) res.constraint_values["mean1"] = mean_axis(mu, 1);
    return res;
}

/// One stationary solve per target value of the conserved linear form.
inline std::vector<StationaryResult> branch_sweep(const RvhModel& model, const DiffusionSpec& a,
                                                  const WeightFunction& w, const SolveConfig& cfg,
                                                  const GridSpec& grid, const std::vector<double>& q_values,
                                                  StationaryOptions opts = {}) {
    std::vector<StationaryResult> out;
    out.reserve(q_values.size());
    const double v2 = norm2sq(model.v);
    for (double q : q_values) {
        Constraint con{psi_linear_form(model.v), q};
        opts.constraint = con;
        // start from a product Gaussian already meeting the constraint
        const Point mean{q * model.v[0] / v2, q * model.v[1] / v2};
        const DensityField guess = make_gaussian(grid, mean, Point{0.5, 0.5});
        out.push_back(find_stationary(DriftModel{model}, a, w, cfg, opts, guess));
    }
    return out;
}

}  // namespace fpklab
