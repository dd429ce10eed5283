#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/trajectory.hpp"
#include "fpklab/weights.hpp"

namespace fpklab {

enum class Scheme { ChangCooper, ExponentialUpwind };
enum class TimeStepping { SemiImplicit, Explicit };
enum class StationaryMode { DirectNullSpace, LongTime };

struct SolveConfig {
    double dt = 0.0;  // 0 selects the default h / (2 max|b| + 1)
    double horizon = 1.0;
    Scheme scheme = Scheme::ChangCooper;
    TimeStepping stepping = TimeStepping::SemiImplicit;
    StationaryMode stationary_mode = StationaryMode::DirectNullSpace;
    double stationary_tol = 1e-8;
    long max_iterations = 4000000;
    double snapshot_stride = 0.1;
    int drift_refresh_lag = 1;
    double blowup_factor = 1e6;
    double boundary_warn_mass = 1e-8;
    double boundary_blowup_mass = 1e-4;
};

namespace detail {

/// Bernoulli function z / (e^z - 1), the exponential-fitting face weight.
inline double bernoulli(double z) {
    const double az = std::fabs(z);
    if (az < 1e-5) return 1.0 - z / 2.0 + z * z / 12.0;  // series, avoids 0/0
    if (z > 500.0) return 0.0;
    if (z < -500.0) return -z;
    return z / (std::exp(z) - 1.0);
}

/// Face weights (P, M) of the conservative flux
///   G = (a/h) (P rho_left - M rho_right).
/// ChangCooper: exponentially fitted weights, exact on discrete Gibbs states.
/// ExponentialUpwind: the full-upwind limit of the fitted weights, first
/// order, kept as a cross-check scheme.
inline void face_weights(Scheme scheme, double w, double& p, double& m) {
    if (scheme == Scheme::ChangCooper) {
        p = bernoulli(-w);
        m = bernoulli(w);
    } else {
        p = 1.0 + std::max(w, 0.0);
        m = 1.0 + std::max(-w, 0.0);
    }
}

/// Solve the tridiagonal system in place (Thomas). The matrices assembled
/// here are M-matrices, for which elimination without pivoting is stable.
inline void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                   std::vector<double>& rhs) {
    const int n = static_cast<int>(diag.size());
    for (int i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

struct AxisSweep {
    std::vector<double> lower, diag, upper, rhs, bline;
};

/// One implicit conservative sweep along `axis` with time step tau.
/// Zero-flux boundaries; column sums of the system matrix are exactly one,
/// so mass is conserved to solver roundoff.
inline void implicit_axis_sweep(DensityField& rho, const VectorField& b, double a, int axis, double tau,
                                Scheme scheme, AxisSweep& ws) {
    const GridSpec& g = rho.grid;
    const int n = g.cells[axis];
    const int nlines = g.size() / n;
    const double h = g.h(axis);
    const double lam = tau * a / (h * h);
    ws.lower.assign(n, 0.0);
    ws.diag.assign(n, 0.0);
    ws.upper.assign(n, 0.0);
    ws.rhs.assign(n, 0.0);
    ws.bline.assign(n, 0.0);
    for (int line = 0; line < nlines; ++line) {
        // map line-local index k to flat index
        int base, stride;
        if (axis == 0) {
            base = line * g.nx();
            stride = 1;
        } else {
            base = line;
            stride = g.nx();
        }
        for (int k = 0; k < n; ++k) ws.bline[k] = b.comp[axis][base + k * stride];
        for (int k = 0; k < n; ++k) {
            ws.diag[k] = 1.0;
            ws.upper[k] = 0.0;
            ws.lower[k] = 0.0;
            ws.rhs[k] = rho.values[base + k * stride];
        }
        for (int f = 0; f + 1 < n; ++f) {  // face between cells f and f+1
            const double bf = 0.5 * (ws.bline[f] + ws.bline[f + 1]);
            double p, m;
            face_weights(scheme, h * bf / a, p, m);
            ws.diag[f] += lam * p;
            ws.upper[f] -= lam * m;
            ws.diag[f + 1] += lam * m;
            ws.lower[f + 1] -= lam * p;
        }
        thomas(ws.lower, ws.diag, ws.upper, ws.rhs);
        for (int k = 0; k < n; ++k) rho.values[base + k * stride] = ws.rhs[k];
    }
}

/// One explicit conservative sweep; throws when tau violates the positivity
/// bound of the scheme.
inline void explicit_axis_sweep(DensityField& rho, const VectorField& b, double a, int axis, double tau,
                                Scheme scheme) {
    const GridSpec& g = rho.grid;
    const int n = g.cells[axis];
    const int nlines = g.size() / n;
    const double h = g.h(axis);
    std::vector<double> flux(n - 1);
    for (int line = 0; line < nlines; ++line) {
        int base, stride;
        if (axis == 0) {
            base = line * g.nx();
            stride = 1;
        } else {
            base = line;
            stride = g.nx();
        }
        for (int f = 0; f + 1 < n; ++f) {
            const double bf = 0.5 * (b.comp[axis][base + f * stride] + b.comp[axis][base + (f + 1) * stride]);
            double p, m;
            face_weights(scheme, h * bf / a, p, m);
            const double stay = tau * a / (h * h) * (p + m);
            if (stay > 1.0)
                throw StabilityViolationError("explicit step: dt exceeds positivity bound " +
                                              std::to_string(tau / stay) + " on axis " + std::to_string(axis));
            flux[f] = (a / h) * (p * rho.values[base + f * stride] - m * rho.values[base + (f + 1) * stride]);
        }
        for (int k = 0; k < n; ++k) {
            double div = 0.0;
            if (k + 1 < n) div += flux[k];
            if (k > 0) div -= flux[k - 1];
            rho.values[base + k * stride] -= tau / h * div;
        }
    }
}

inline void check_nonnegative(DensityField& rho, const char* where) {
    double floor = 0.0;
    for (double v : rho.values) floor = std::min(floor, v);
    if (floor < -1e-12) throw NegativeDensityError(std::string(where) + ": negative density " + std::to_string(floor));
    if (floor < 0.0)
        for (double& v : rho.values)
            if (v < 0.0) v = 0.0;  // roundoff-scale only
}

}  // namespace detail

/// Default step size h / (2 max|b| + 1).
inline double default_dt(const GridSpec& grid, const VectorField& b) {
    double h = grid.h(0);
    if (grid.dim == 2) h = std::min(h, grid.h(1));
    return h / (2.0 * b.max_norm() + 1.0);
}

/// The step actually taken for a config: the default (or configured) dt
/// rounded down so that a whole number of steps fits one snapshot stride.
inline double effective_dt(const SolveConfig& cfg, double raw_dt) {
    const long n_sub = std::max(1L, std::lround(std::ceil(cfg.snapshot_stride / raw_dt - 1e-12)));
    return cfg.snapshot_stride / n_sub;
}

/// Stability bound for explicit stepping.
inline double explicit_dt_bound(const GridSpec& grid, const DiffusionSpec& a) {
    double h = grid.h(0);
    if (grid.dim == 2) h = std::min(h, grid.h(1));
    return h * h / (2.0 * a.max_entry() * grid.dim);
}

/// One conservative, positivity-preserving step of the linear equation with
/// the tabulated frozen drift b. In 2D the operator is split dimension by
/// dimension (Strang).
inline DensityField step_linear(const DensityField& rho, const VectorField& b, const DiffusionSpec& a,
                                double dt, const SolveConfig& cfg = {}) {
    require_same_grid(rho.grid, b.grid);
    if (!(dt > 0.0)) throw Error("step_linear: dt must be positive");
    DensityField out = rho;
    detail::AxisSweep ws;
    if (cfg.stepping == TimeStepping::Explicit) {
        if (dt > explicit_dt_bound(rho.grid, a))
            throw StabilityViolationError("explicit step: dt " + std::to_string(dt) + " exceeds bound " +
                                          std::to_string(explicit_dt_bound(rho.grid, a)));
        if (rho.grid.dim == 1) {
            detail::explicit_axis_sweep(out, b, a.a[0], 0, dt, cfg.scheme);
        } else {
            detail::explicit_axis_sweep(out, b, a.a[0], 0, 0.5 * dt, cfg.scheme);
            detail::explicit_axis_sweep(out, b, a.a[1], 1, dt, cfg.scheme);
            detail::explicit_axis_sweep(out, b, a.a[0], 0, 0.5 * dt, cfg.scheme);
        }
    } else {
        if (rho.grid.dim == 1) {
            detail::implicit_axis_sweep(out, b, a.a[0], 0, dt, cfg.scheme, ws);
        } else {
            detail::implicit_axis_sweep(out, b, a.a[0], 0, 0.5 * dt, cfg.scheme, ws);
            detail::implicit_axis_sweep(out, b, a.a[1], 1, dt, cfg.scheme, ws);
            detail::implicit_axis_sweep(out, b, a.a[0], 0, 0.5 * dt, cfg.scheme, ws);
        }
    }
    detail::check_nonnegative(out, "step_linear");
    return out;
}

/// Mass in the outermost cell ring.
inline double boundary_band_mass(const DensityField& rho) {
    const GridSpec& g = rho.grid;
    long double s = 0.0L;
    if (g.dim == 1) {
        s = rho.values.front() + rho.values.back();
    } else {
        for (int ix = 0; ix < g.nx(); ++ix) s += rho.values[g.index(ix, 0)] + rho.values[g.index(ix, g.ny() - 1)];
        for (int iy = 1; iy + 1 < g.ny(); ++iy)
            s += rho.values[g.index(0, iy)] + rho.values[g.index(g.nx() - 1, iy)];
    }
    return static_cast<double>(s) * g.cell_volume();
}

namespace detail {

/// Shared time loop for the linear and nonlinear Cauchy problems. The drift
/// provider is called with the current state every `drift_refresh_lag` steps;
/// a frozen provider recovers the linear equation.
inline Trajectory evolve_core(const DensityField& rho0, const DiffusionSpec& a, const WeightFunction& w,
                              const SolveConfig& cfg,
                              const std::function<void(const DensityField&, double, VectorField&)>& refresh_drift,
                              std::vector<DensityField>* dense_path = nullptr) {
    Trajectory traj;
    traj.grid = rho0.grid;
    traj.snapshot_stride = cfg.snapshot_stride;

    DensityField rho = normalize(rho0);
    VectorField b(rho.grid);
    refresh_drift(rho, 0.0, b);

    const double stride = cfg.snapshot_stride;
    const long n_strides = std::lround(cfg.horizon / stride);
    const double dt = effective_dt(cfg, cfg.dt > 0.0 ? cfg.dt : default_dt(rho.grid, b));
    const int n_sub = static_cast<int>(std::lround(stride / dt));
    traj.dt = dt;

    auto record_channels = [&](double t) {
        traj.step_times.push_back(t);
        traj.channels["mass"].push_back(rho.mass());
        traj.channels["v_moment"].push_back(v_moment(rho, w));
        traj.channels["mean0"].push_back(mean_axis(rho, 0));
        traj.channels["m2_0"].push_back(raw_second_moment_axis(rho, 0));
        if (rho.grid.dim == 2) {
            traj.channels["mean1"].push_back(mean_axis(rho, 1));
            traj.channels["m2_1"].push_back(raw_second_moment_axis(rho, 1));
        }
    };
    auto record_snapshot = [&](double t) {
        DensityField snap = normalize(rho);
        const double band = boundary_band_mass(snap);
        if (band > cfg.boundary_blowup_mass)
            throw BlowUpError("evolve: boundary band mass " + std::to_string(band) + " at t=" +
                                  std::to_string(t) + "; grid no longer contains the solution",
                              t);
        if (band > cfg.boundary_warn_mass)
            traj.warnings.push_back("boundary band mass " + std::to_string(band) + " at t=" + std::to_string(t));
        traj.snap_times.push_back(t);
        traj.snapshots.push_back(std::move(snap));
        rho = traj.snapshots.back();  // renormalized restart keeps recorded mass at 1
    };

    record_channels(0.0);
    record_snapshot(0.0);
    if (dense_path) dense_path->push_back(rho);
    const double v0 = traj.channels["v_moment"].front();

    long step = 0;
    for (long s = 0; s < n_strides; ++s) {
        for (int k = 0; k < n_sub; ++k, ++step) {
            if (cfg.drift_refresh_lag <= 1 || step % cfg.drift_refresh_lag == 0)
                refresh_drift(rho, step * dt, b);
            rho = step_linear(rho, b, a, dt, cfg);
            const double t = (s * static_cast<long>(n_sub) + k + 1) * dt;
            record_channels(t);
            if (dense_path) dense_path->push_back(rho);
            const double vm = traj.channels["v_moment"].back();
            if (vm > cfg.blowup_factor * std::max(v0, 1.0))
                throw BlowUpError("evolve: Lyapunov moment " + std::to_string(vm) + " exceeded " +
                                      std::to_string(cfg.blowup_factor) + " x initial at t=" + std::to_string(t),
                                  t);
        }
        record_snapshot((s + 1) * stride);
    }
    return traj;
}

}  // namespace detail

/// Evolve the linear equation with a frozen drift field.
inline Trajectory evolve_linear(const DensityField& rho0, const VectorField& b, const DiffusionSpec& a,
                                const WeightFunction& w, const SolveConfig& cfg) {
    require_same_grid(rho0.grid, b.grid);
    return detail::evolve_core(rho0, a, w, cfg,
                               [&b](const DensityField&, double, VectorField& out) { out = b; });
}

namespace detail {

inline void require_confining(const VectorField& b) {
    const GridSpec& g = b.grid;
    double worst = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
        const int n = g.cells[axis];
        const int nlines = g.size() / n;
        for (int line = 0; line < nlines; ++line) {
            int base, stride;
            if (axis == 0) {
                base = line * g.nx();
                stride = 1;
            } else {
                base = line;
                stride = g.nx();
            }
            worst = std::max(worst, -b.comp[axis][base]);                      // lower face: need b >= 0
            worst = std::max(worst, b.comp[axis][base + (n - 1) * stride]);    // upper face: need b <= 0
        }
    }
    if (worst > 1e-12)
        throw NotConfiningError("stationary solve: outward drift " + std::to_string(worst) +
                                " at the grid boundary");
}

/// Zero-flux steady state in 1D: the flux vanishes on every face, giving a
/// two-term recurrence solved in log space.
inline DensityField null_space_1d(const VectorField& b, const DiffusionSpec& a, Scheme scheme) {
    const GridSpec& g = b.grid;
    const int n = g.nx();
    const double h = g.h(0);
    std::vector<double> logr(n, 0.0);
    for (int f = 0; f + 1 < n; ++f) {
        const double bf = 0.5 * (b.comp[0][f] + b.comp[0][f + 1]);
        double p, m;
        face_weights(scheme, h * bf / a.a[0], p, m);
        logr[f + 1] = logr[f] + std::log(p) - std::log(m);
    }
    const double top = *std::max_element(logr.begin(), logr.end());
    DensityField rho(g);
    for (int i = 0; i < n; ++i) rho.values[i] = std::exp(logr[i] - top);
    return normalize(rho);
}

/// Direct kernel of the unsplit 2D flux-divergence operator: one row is
/// pinned to a reference cell, the solution is normalized afterwards.
inline DensityField null_space_2d(const VectorField& b, const DiffusionSpec& a, Scheme scheme) {
    const GridSpec& g = b.grid;
    const int n = g.size();
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trip;
    trip.reserve(static_cast<size_t>(n) * 5);
    std::vector<double> diag(n, 0.0);
    auto add_face = [&](int left, int right, int axis) {
        const double h = g.h(axis);
        const double bf = 0.5 * (b.comp[axis][left] + b.comp[axis][right]);
        double p, m;
        face_weights(scheme, h * bf / a.a[axis], p, m);
        const double s = a.a[axis] / (h * h);
        // divergence contributions of G = (a/h)(p rho_L - m rho_R)
        diag[left] += s * p;
        trip.emplace_back(left, right, -s * m);
        diag[right] += s * m;
        trip.emplace_back(right, left, -s * p);
    };
    for (int iy = 0; iy < g.ny(); ++iy)
        for (int ix = 0; ix + 1 < g.nx(); ++ix) add_face(g.index(ix, iy), g.index(ix + 1, iy), 0);
    for (int iy = 0; iy + 1 < g.ny(); ++iy)
        for (int ix = 0; ix < g.nx(); ++ix) add_face(g.index(ix, iy), g.index(ix, iy + 1), 1);

    const int ref = g.index(g.nx() / 2, g.ny() / 2);
    std::vector<Trip> rows;
    rows.reserve(trip.size() + n);
    for (const auto& t : trip)
        if (t.row() != ref) rows.push_back(t);
    for (int i = 0; i < n; ++i)
        if (i != ref) rows.emplace_back(i, i, diag[i]);
    rows.emplace_back(ref, ref, 1.0);

    Eigen::SparseMatrix<double> mat(n, n);
    mat.setFromTriplets(rows.begin(), rows.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(mat);
    lu.factorize(mat);
    if (lu.info() != Eigen::Success) throw NoConvergenceError("stationary solve: sparse factorization failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[ref] = 1.0;
    Eigen::VectorXd sol = lu.solve(rhs);

    DensityField rho(g);
    for (int i = 0; i < n; ++i) rho.values[i] = sol[i];
    check_nonnegative(rho, "null_space_2d");
    return normalize(rho);
}

}  // namespace detail

/// Stationary solution of the linear equation with frozen drift b.
/// DirectNullSpace solves the one-dimensional kernel of the discrete
/// operator; LongTime integrates until the W-weighted update rate drops
/// below the configured tolerance.
inline DensityField solve_linear_stationary(const VectorField& b, const DiffusionSpec& a, const SolveConfig& cfg,
                                            const WeightFunction& w = WeightFunction(),
                                            const DensityField* guess = nullptr) {
    detail::require_confining(b);
    const GridSpec& g = b.grid;
    if (cfg.stationary_mode == StationaryMode::DirectNullSpace) {
        return g.dim == 1 ? detail::null_space_1d(b, a, cfg.scheme) : detail::null_space_2d(b, a, cfg.scheme);
    }
    DensityField rho = guess ? normalize(*guess) : normalize(DensityField(g, 1.0));
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(g, b);
    const int check_every = 16;
    DensityField prev = rho;
    for (long it = 0; it < cfg.max_iterations; ++it) {
        rho = step_linear(rho, b, a, dt, cfg);
        if ((it + 1) % check_every == 0) {
            const double rate = weighted_tv(rho, prev, w) / (check_every * dt);
            if (rate < cfg.stationary_tol) return normalize(rho);
            prev = rho;
        }
    }
    throw NoConvergenceError("stationary solve: long-time integration did not settle within " +
                             std::to_string(cfg.max_iterations) + " steps");
}

}  // namespace fpklab
