#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpklab/drift.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/parallel.hpp"
#include "fpklab/trajectory.hpp"

namespace fpklab {

namespace detail {

inline uint64_t splitmix64(uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Minimal UniformRandomBitGenerator over a per-particle 64-bit state.
struct ParticleRng {
    uint64_t* state;
    using result_type = uint64_t;
    static constexpr uint64_t min() { return 0; }
    static constexpr uint64_t max() { return ~0ULL; }
    uint64_t operator()() { return splitmix64(*state); }
};

inline uint64_t bits_of(double x) {
    uint64_t b;
    std::memcpy(&b, &x, sizeof(b));
    return b;
}

}  // namespace detail

/// Interacting-particle ensemble. Each particle carries its own noise
/// stream, keyed by the global seed, its initial position and a duplicate
/// counter; permuting the initial samples therefore permutes the simulated
/// trajectories (interactions are symmetric sums).
struct ParticleEnsemble {
    int dim = 1;
    double time = 0.0;
    uint64_t seed = 0;
    std::vector<double> pos;          // interleaved, dim doubles per particle
    std::vector<uint64_t> rng_state;  // one stream per particle

    int size() const { return static_cast<int>(rng_state.size()); }

    Point at(int i) const {
        Point p{pos[static_cast<size_t>(i) * dim], 0.0};
        if (dim == 2) p[1] = pos[static_cast<size_t>(i) * dim + 1];
        return p;
    }
};

inline ParticleEnsemble make_ensemble(const std::vector<double>& initial_interleaved, int dim, uint64_t seed) {
    ParticleEnsemble e;
    e.dim = dim;
    e.seed = seed;
    e.pos = initial_interleaved;
    const int n = static_cast<int>(initial_interleaved.size()) / dim;
    e.rng_state.resize(n);
    std::unordered_map<uint64_t, uint64_t> dup;
    for (int i = 0; i < n; ++i) {
        uint64_t key = seed;
        for (int a = 0; a < dim; ++a) (void)detail::splitmix64(key += detail::bits_of(e.pos[i * dim + a]));
        const uint64_t d = dup[key]++;
        uint64_t s = key + 0x632BE59BD9B4E019ULL * (d + 1);
        (void)detail::splitmix64(s);
        e.rng_state[i] = s;
        for (int a = 0; a < dim; ++a)
            if (!std::isfinite(e.pos[i * dim + a])) throw Error("ensemble: non-finite initial position");
    }
    return e;
}

using Sampler = std::function<Point(std::mt19937_64&)>;

inline ParticleEnsemble sample_ensemble(const Sampler& sampler, int n, int dim, uint64_t seed) {
    std::mt19937_64 master(seed ^ 0xA02BDBF7BB3C0A7ULL);
    std::vector<double> pos;
    pos.reserve(static_cast<size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        const Point p = sampler(master);
        pos.push_back(p[0]);
        if (dim == 2) pos.push_back(p[1]);
    }
    return make_ensemble(pos, dim, seed);
}

namespace detail {

/// Empirical interaction statistics (mean, trig moments) shared by the
/// closed-form drift variants; O(N).
struct EmpiricalStats {
    Point mean{0.0, 0.0};
    double eta_sin = 0.0, eta_cos = 0.0;
};

inline EmpiricalStats empirical_stats(const ParticleEnsemble& e, bool want_trig) {
    EmpiricalStats st;
    const int n = e.size();
    long double m0 = 0.0L, m1 = 0.0L, es = 0.0L, ec = 0.0L;
    for (int i = 0; i < n; ++i) {
        m0 += e.pos[static_cast<size_t>(i) * e.dim];
        if (e.dim == 2) m1 += e.pos[static_cast<size_t>(i) * e.dim + 1];
    }
    if (want_trig)
        for (int i = 0; i < n; ++i) {
            const double y1 = e.dim == 2 ? e.pos[static_cast<size_t>(i) * e.dim + 1] : 0.0;
            es += std::sin(y1);
            ec += std::cos(y1);
        }
    st.mean[0] = static_cast<double>(m0) / n;
    if (e.dim == 2) st.mean[1] = static_cast<double>(m1) / n;
    st.eta_sin = static_cast<double>(es) / n;
    st.eta_cos = static_cast<double>(ec) / n;
    return st;
}

}  // namespace detail

/// Drift at a particle against the empirical measure of the ensemble.
/// Closed-form interaction variants cost O(1) given the shared statistics;
/// generic kernels fall back to the O(N) pairwise sum.
inline Point empirical_drift(const DriftModel& model, const ParticleEnsemble& e, int i,
                             const detail::EmpiricalStats& st) {
    const Point x = e.at(i);
    if (const auto* mfl = std::get_if<MeanFieldLinear>(&model))
        return Point{-x[0] + mfl->delta_shift + mfl->epsilon * st.mean[0], 0.0};
    if (const auto* gc = std::get_if<GradientConfining>(&model)) return gc->eval(x);
    if (const auto* rvh = std::get_if<RvhModel>(&model)) {
        const Point rx = mat_apply(rvh->r, x, 2);
        const double qv = rvh->v[0] * st.mean[0] + rvh->v[1] * st.mean[1];
        const double eta = rvh->eta_amplitude * (std::sin(x[0]) * st.eta_cos - std::cos(x[0]) * st.eta_sin);
        return Point{-rx[0] + qv * rvh->h[0] + rvh->epsilon * eta,
                     -rx[1] + qv * rvh->h[1] - rvh->epsilon * eta};
    }
    const auto& ck = std::get<ConvolutionKernelModel>(model);
    Point b = ck.b0.eval(x, ck.dim);
    switch (ck.kernel.kind) {
        case Kernel::Kind::Zero:
            break;
        case Kernel::Kind::Linear: {
            Point conv = mat_apply(ck.kernel.ax, x, ck.dim);
            const Point my = mat_apply(ck.kernel.ay, st.mean, ck.dim);
            conv[0] += my[0] + ck.kernel.c[0];
            conv[1] += my[1] + ck.kernel.c[1];
            b[0] += ck.epsilon * conv[0];
            if (ck.dim == 2) b[1] += ck.epsilon * conv[1];
            break;
        }
        case Kernel::Kind::SineEta: {
            const double eta = ck.kernel.amplitude * (std::sin(x[0]) * st.eta_cos - std::cos(x[0]) * st.eta_sin);
            b[0] += ck.epsilon * eta;
            b[1] -= ck.epsilon * eta;
            break;
        }
        case Kernel::Kind::TanhDifference: {
            long double s = 0.0L;
            for (int j = 0; j < e.size(); ++j)
                s += std::tanh(x[0] - e.pos[static_cast<size_t>(j) * e.dim]);
            b[0] += ck.epsilon * ck.kernel.amplitude * static_cast<double>(s) / e.size();
            break;
        }
    }
    return b;
}

/// One Euler-Maruyama step, dX = b dt + sqrt(2 a) dB. The noise amplitude
/// sqrt(2 a) matches the second-derivative form of the density equation
/// (no 1/2 in the diffusion term).
inline void particle_step(ParticleEnsemble& e, const DriftModel& model, const DiffusionSpec& a, double dt) {
    const bool want_trig = [&] {
        if (const auto* rvh = std::get_if<RvhModel>(&model)) return rvh->eta_amplitude != 0.0;
        if (const auto* ck = std::get_if<ConvolutionKernelModel>(&model))
            return ck->kernel.kind == Kernel::Kind::SineEta;
        return false;
    }();
    const detail::EmpiricalStats st = detail::empirical_stats(e, want_trig);
    const int n = e.size();
    std::vector<double> drifts(static_cast<size_t>(n) * e.dim);
    parallel_for(0, n, [&](int i) {
        const Point b = empirical_drift(model, e, i, st);
        drifts[static_cast<size_t>(i) * e.dim] = b[0];
        if (e.dim == 2) drifts[static_cast<size_t>(i) * e.dim + 1] = b[1];
    });
    const double amp0 = std::sqrt(2.0 * a.a[0] * dt);
    const double amp1 = std::sqrt(2.0 * a.a[1] * dt);
    for (int i = 0; i < n; ++i) {
        detail::ParticleRng rng{&e.rng_state[i]};
        std::normal_distribution<double> normal;
        e.pos[static_cast<size_t>(i) * e.dim] += drifts[static_cast<size_t>(i) * e.dim] * dt + amp0 * normal(rng);
        if (e.dim == 2)
            e.pos[static_cast<size_t>(i) * e.dim + 1] +=
                drifts[static_cast<size_t>(i) * e.dim + 1] * dt + amp1 * normal(rng);
    }
    e.time += dt;
}

struct ParticleSnapshots {
    int dim = 1;
    int n = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> frames;  // interleaved positions per snapshot
};

inline ParticleSnapshots simulate(const Sampler& nu, const DriftModel& model, const DiffusionSpec& a, int n,
                                  double dt, double horizon, uint64_t seed, double stride = 0.1) {
    ParticleEnsemble e = sample_ensemble(nu, n, model_dim(model), seed);
    ParticleSnapshots snaps;
    snaps.dim = e.dim;
    snaps.n = n;
    const long n_strides = std::lround(horizon / stride);
    const int n_sub = std::max(1L, std::lround(std::ceil(stride / dt - 1e-12)));
    const double dt_eff = stride / n_sub;
    snaps.times.push_back(0.0);
    snaps.frames.push_back(e.pos);
    for (long s = 0; s < n_strides; ++s) {
        for (int k = 0; k < n_sub; ++k) particle_step(e, model, a, dt_eff);
        e.time = (s + 1) * stride;  // avoid drift accumulation in recorded times
        snaps.times.push_back(e.time);
        snaps.frames.push_back(e.pos);
    }
    return snaps;
}

struct EmpiricalDensity {
    DensityField field;
    int out_of_box = 0;
};

/// Histogram of the positions on the grid, optionally smoothed with a
/// Gaussian of Silverman-rule bandwidth, then normalized.
inline EmpiricalDensity empirical_density(const std::vector<double>& pos, int dim, const GridSpec& grid,
                                          bool smooth = false) {
    EmpiricalDensity out;
    out.field = DensityField(grid);
    const int n = static_cast<int>(pos.size()) / dim;
    int idx[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
        bool inside = true;
        for (int a = 0; a < grid.dim; ++a) {
            const double x = pos[static_cast<size_t>(i) * dim + a];
            const int k = static_cast<int>(std::floor((x - grid.lower[a]) / grid.h(a)));
            if (k < 0 || k >= grid.cells[a]) {
                inside = false;
                break;
            }
            idx[a] = k;
        }
        if (!inside) {
            ++out.out_of_box;
            continue;
        }
        out.field.values[grid.index(idx[0], grid.dim == 2 ? idx[1] : 0)] += 1.0;
    }
    if (out.out_of_box == n) throw ZeroMassError("empirical_density: all particles outside the grid");
    if (smooth) {
        for (int a = 0; a < grid.dim; ++a) {
            // Silverman bandwidth from the sample spread along this axis
            long double s1 = 0.0L, s2 = 0.0L;
            for (int i = 0; i < n; ++i) {
                const double x = pos[static_cast<size_t>(i) * dim + a];
                s1 += x;
                s2 += x * x;
            }
            const double mean = static_cast<double>(s1) / n;
            const double sd = std::sqrt(std::max(1e-300, static_cast<double>(s2) / n - mean * mean));
            const double bw = sd * std::pow(4.0 / ((grid.dim + 2.0) * n), 1.0 / (grid.dim + 4.0));
            const int reach = std::max(1, static_cast<int>(std::ceil(4.0 * bw / grid.h(a))));
            std::vector<double> kern(2 * reach + 1);
            double ksum = 0.0;
            for (int k = -reach; k <= reach; ++k) {
                kern[k + reach] = std::exp(-0.5 * (k * grid.h(a) / bw) * (k * grid.h(a) / bw));
                ksum += kern[k + reach];
            }
            for (double& kv : kern) kv /= ksum;
            DensityField sm(grid);
            const int na = grid.cells[a];
            for (int flat = 0; flat < grid.size(); ++flat) {
                const int ia = a == 0 ? flat % grid.nx() : flat / grid.nx();
                double acc = 0.0;
                for (int k = -reach; k <= reach; ++k) {
                    const int j = ia + k;
                    if (j < 0 || j >= na) continue;
                    acc += kern[k + reach] * out.field.values[flat + (j - ia) * (a == 0 ? 1 : grid.nx())];
                }
                sm.values[flat] = acc;
            }
            out.field = sm;
        }
    }
    out.field = normalize(out.field);
    return out;
}

struct CrossValidationRow {
    double time;
    std::string channel;
    double particle_value;
    double pde_value;
    double se;
    double z;
};

struct CrossValidationReport {
    std::vector<CrossValidationRow> rows;
    double max_z = 0.0;
    int flagged = 0;  // |z| > 3
};

/// Variance of the collective fluctuation of the empirical mean of an
/// interacting ensemble. Particles are correlated through the interaction:
/// for the mean-coupled linear model the ensemble mean itself performs a
/// slowed diffusion, d xbar = -(1 - eps) xbar dt + sqrt(2/N) dWbar, whose
/// variance is (1 - exp(-2 (1-eps) t)) / ((1-eps) N), degenerating to 2t/N
/// at eps = 1. Ignoring this mode understates the standard error of
/// mean-type functionals. Zero for measure-independent drifts.
inline double collective_mean_variance(const DriftModel& model, double t, int n) {
    if (const auto* mfl = std::get_if<MeanFieldLinear>(&model)) {
        const double rate = 1.0 - mfl->epsilon;
        if (std::fabs(rate) < 1e-12) return 2.0 * t / n;
        return (1.0 - std::exp(-2.0 * rate * t)) / (rate * n);
    }
    return 0.0;
}

/// Compare per-particle functional estimates against the recorded PDE
/// channels at matching times; |z| > 3 raises a flag. The standard error
/// combines the per-particle scatter with the collective mode of the
/// interacting ensemble (delta method for the second-moment channels).
inline CrossValidationReport cross_validate(const ParticleSnapshots& snaps, const Trajectory& traj,
                                            const DriftModel& model) {
    CrossValidationReport rep;
    std::vector<std::tuple<std::string, std::function<double(const Point&)>, bool>> funcs = {
        {"mean0", [](const Point& p) { return p[0]; }, false},
        {"m2_0", [](const Point& p) { return p[0] * p[0]; }, true},
    };
    if (snaps.dim == 2) {
        funcs.push_back({"mean1", [](const Point& p) { return p[1]; }, false});
        funcs.push_back({"m2_1", [](const Point& p) { return p[1] * p[1]; }, true});
    }
    for (size_t f = 0; f < snaps.frames.size(); ++f) {
        const double t = snaps.times[f];
        // locate the matching recorded step
        const double dt = traj.dt;
        const long k = std::lround(t / dt);
        if (k < 0 || k >= static_cast<long>(traj.step_times.size()) ||
            std::fabs(traj.step_times[k] - t) > 1e-9 + 1e-9 * std::fabs(t))
            throw TimeGridMismatchError("cross_validate: no recorded step at t=" + std::to_string(t));
        const double collective = collective_mean_variance(model, t, snaps.n);
        const auto& frame = snaps.frames[f];
        const double mean0 = [&] {
            long double s = 0.0L;
            for (int i = 0; i < snaps.n; ++i) s += frame[static_cast<size_t>(i) * snaps.dim];
            return static_cast<double>(s) / snaps.n;
        }();
        for (const auto& [name, fn, second_moment] : funcs) {
            long double s1 = 0.0L, s2 = 0.0L;
            for (int i = 0; i < snaps.n; ++i) {
                Point p{frame[static_cast<size_t>(i) * snaps.dim], 0.0};
                if (snaps.dim == 2) p[1] = frame[static_cast<size_t>(i) * snaps.dim + 1];
                const double v = fn(p);
                s1 += v;
                s2 += v * v;
            }
            const double est = static_cast<double>(s1) / snaps.n;
            const double var = std::max(0.0, static_cast<double>(s2) / snaps.n - est * est);
            double se2 = var / snaps.n + (second_moment ? 4.0 * mean0 * mean0 * collective : collective);
            const double se = std::sqrt(se2);
            const double pde = traj.channel(name)[k];
            const double z = se > 0.0 ? (est - pde) / se : (est == pde ? 0.0 : 1e300);
            rep.rows.push_back({t, name, est, pde, se, z});
            rep.max_z = std::max(rep.max_z, std::fabs(z));
            if (std::fabs(z) > 3.0) ++rep.flagged;
        }
    }
    return rep;
}

/// Gaussian, mixture, uniform and degenerate-point samplers.
inline Sampler gaussian_sampler(const Point& mean, const Point& variance, int dim) {
    return [mean, variance, dim](std::mt19937_64& rng) {
        std::normal_distribution<double> n0(mean[0], std::sqrt(variance[0]));
        Point p{n0(rng), 0.0};
        if (dim == 2) {
            std::normal_distribution<double> n1(mean[1], std::sqrt(variance[1]));
            p[1] = n1(rng);
        }
        return p;
    };
}

inline Sampler uniform_sampler(const Point& lo, const Point& hi, int dim) {
    return [lo, hi, dim](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u0(lo[0], hi[0]);
        Point p{u0(rng), 0.0};
        if (dim == 2) {
            std::uniform_real_distribution<double> u1(lo[1], hi[1]);
            p[1] = u1(rng);
        }
        return p;
    };
}

inline Sampler point_sampler(const Point& x) {
    return [x](std::mt19937_64&) { return x; };
}

}  // namespace fpklab
