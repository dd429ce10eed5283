#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fpklab/drift.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/trajectory.hpp"
#include "fpklab/weights.hpp"

namespace fpklab {

/// Exponential-decay fit alpha1 * exp(-alpha2 t) of a positive series.
struct DecayFit {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;  // log-scale residuals per fitted point
};

/// Least squares on (t, log value) inside the window (default: the last half
/// of the series, skipping transients). Values below 1e-14 truncate the
/// window; fewer than 5 surviving points is an error.
inline DecayFit decay_rate_fit(const std::vector<double>& times, const std::vector<double>& values,
                               std::optional<std::pair<double, double>> window = std::nullopt) {
    if (times.size() != values.size()) throw Error("decay_rate_fit: size mismatch");
    if (times.empty()) throw WindowTooShortError("decay_rate_fit: empty series");
    double lo = window ? window->first : 0.5 * (times.front() + times.back());
    double hi = window ? window->second : times.back();
    std::vector<double> ts, ls;
    for (size_t i = 0; i < times.size(); ++i) {
        if (times[i] < lo - 1e-12 || times[i] > hi + 1e-12) continue;
        if (!(values[i] > 1e-14)) break;  // decay floor reached; truncate
        ts.push_back(times[i]);
        ls.push_back(std::log(values[i]));
    }
    if (ts.size() < 5)
        throw WindowTooShortError("decay_rate_fit: only " + std::to_string(ts.size()) +
                                  " usable points in window");
    const size_t n = ts.size();
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (size_t i = 0; i < n; ++i) {
        st += ts[i];
        sl += ls[i];
        stt += ts[i] * ts[i];
        stl += ts[i] * ls[i];
    }
    const double denom = n * stt - st * st;
    if (!(std::fabs(denom) > 0.0)) throw WindowTooShortError("decay_rate_fit: degenerate time window");
    const double slope = (n * stl - st * sl) / denom;
    const double intercept = (sl - slope * st) / n;

    DecayFit fit;
    fit.alpha2 = -slope;
    fit.alpha1 = std::exp(intercept);
    fit.t_lo = ts.front();
    fit.t_hi = ts.back();
    double ss_res = 0.0, ss_tot = 0.0;
    const double lbar = sl / n;
    fit.residuals.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const double r = ls[i] - (intercept + slope * ts[i]);
        fit.residuals.push_back(r);
        ss_res += r * r;
        ss_tot += (ls[i] - lbar) * (ls[i] - lbar);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

/// W-weighted distance of every snapshot to a reference measure.
inline std::pair<std::vector<double>, std::vector<double>> distance_series(const Trajectory& traj,
                                                                           const DensityField& ref,
                                                                           const WeightFunction& w) {
    std::vector<double> ts, ds;
    ts.reserve(traj.snapshots.size());
    ds.reserve(traj.snapshots.size());
    for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        ts.push_back(traj.snap_times[i]);
        ds.push_back(weighted_tv(traj.snapshots[i], ref, w));
    }
    return {ts, ds};
}

struct LyapunovReport {
    double c1 = 0.0, c2 = 0.0;
    double max_margin = 0.0;  // max over samples of L V - (C1 - C2 V); <= 0 validates
    Point argmax{0.0, 0.0};
    int sample_points = 0;
    int measure_count = 0;
};

/// Check the strong drift bound L_mu V <= C1 - C2 V on sampled points for
/// each test measure, with exact derivatives of V.
inline LyapunovReport lyapunov_check(const DriftModel& model, const DiffusionSpec& a, const WeightFunction& w,
                                     double c1, double c2, const std::vector<DensityField>& test_measures,
                                     int sample_points, uint64_t seed = 7u) {
    if (test_measures.empty()) throw Error("lyapunov_check: no test measures");
    const GridSpec& grid = test_measures.front().grid;
    std::mt19937_64 rng(seed);
    std::array<std::uniform_real_distribution<double>, 2> u{
        std::uniform_real_distribution<double>(grid.lower[0], grid.upper[0]),
        std::uniform_real_distribution<double>(grid.lower[1], grid.upper[1])};
    LyapunovReport rep;
    rep.c1 = c1;
    rep.c2 = c2;
    rep.sample_points = sample_points;
    rep.measure_count = static_cast<int>(test_measures.size());
    rep.max_margin = -std::numeric_limits<double>::infinity();
    for (const auto& mu : test_measures) {
        const InteractionState st = compute_interaction(model, mu);
        for (int s = 0; s < sample_points; ++s) {
            Point x{u[0](rng), 0.0};
            if (grid.dim == 2) x[1] = u[1](rng);
            const Point b = eval_drift_cached(model, x, st);
            const Point gv = w.gradV(x, grid.dim);
            double lv = a.a[0] * w.d2V(x, 0) + b[0] * gv[0];
            if (grid.dim == 2) lv += a.a[1] * w.d2V(x, 1) + b[1] * gv[1];
            const double margin = lv - (c1 - c2 * w.V(x));
            if (margin > rep.max_margin) {
                rep.max_margin = margin;
                rep.argmax = x;
            }
        }
    }
    return rep;
}

/// Kantorovich contraction margins against the bound
///   W1(mu_t, mu) <= exp(-(kappa - c_lip) t) W1(nu, mu).
/// Requires c_lip < kappa; the boundary case is a reported hypothesis
/// violation, not a silent pass.
inline std::vector<std::pair<double, double>> w1_contraction_check(const Trajectory& traj,
                                                                   const DensityField& stationary, double kappa,
                                                                   double c_lip) {
    if (traj.grid.dim != 1) throw DimensionUnsupportedError("w1_contraction_check: 1D only");
    if (!(c_lip < kappa))
        throw HypothesisViolatedError("w1_contraction_check: requires c_lip < kappa, got c_lip=" +
                                      std::to_string(c_lip) + ", kappa=" + std::to_string(kappa));
    if (traj.snapshots.empty()) throw EmptyTrajectoryError("w1_contraction_check: empty trajectory");
    const double w1_0 = w1_1d(traj.initial(), stationary);
    std::vector<std::pair<double, double>> margins;
    margins.reserve(traj.snapshots.size());
    for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        const double t = traj.snap_times[i];
        const double bound = std::exp(-(kappa - c_lip) * t) * w1_0;
        margins.emplace_back(t, bound - w1_1d(traj.snapshots[i], stationary));
    }
    return margins;
}

/// Monotonicity constant kappa and W1-Lipschitz constant of the measure
/// dependence, for the catalogued models where they are known in closed form.
inline std::pair<double, double> kantorovich_constants(const DriftModel& model) {
    if (const auto* mfl = std::get_if<MeanFieldLinear>(&model)) return {1.0, mfl->epsilon};
    if (const auto* gc = std::get_if<GradientConfining>(&model)) return {gc->kappa(), 0.0};
    throw Error("kantorovich_constants: not catalogued for this model variant");
}

}  // namespace fpklab
