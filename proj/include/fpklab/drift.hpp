#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fpklab/errors.hpp"
#include "fpklab/functions.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/parallel.hpp"

namespace fpklab {

using Mat2 = std::array<std::array<double, 2>, 2>;

inline Point mat_apply(const Mat2& m, const Point& x, int dim) {
    if (dim == 1) return Point{m[0][0] * x[0], 0.0};
    return Point{m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]};
}

/// Spectral norm of a 2x2 matrix.
inline double spectral_norm(const Mat2& m, int dim) {
    if (dim == 1) return std::fabs(m[0][0]);
    // singular values of [[a,b],[c,d]]
    const double a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
    const double s = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
    return std::sqrt(0.5 * (s + disc));
}

// ---------------------------------------------------------------------------
// Interaction kernels. All kernels come from a fixed closed-form catalogue so
// that evaluation stays exact and auditable; there is no user-code hook.
// ---------------------------------------------------------------------------

struct Kernel {
    enum class Kind { Zero, Linear, TanhDifference, SineEta };
    Kind kind = Kind::Zero;

    // Linear: K(x, y) = Ax x + Ay y + c
    Mat2 ax{};
    Mat2 ay{};
    Point c{0.0, 0.0};

    // TanhDifference (1D): K(x, y) = amplitude * tanh(x0 - y0)
    // SineEta (2D):        K(x, y) = amplitude * sin(x0 - y1) * (1, -1)
    double amplitude = 1.0;

    static Kernel zero() { return Kernel{}; }

    static Kernel linear(const Mat2& ax_, const Mat2& ay_, const Point& c_ = {0.0, 0.0}) {
        Kernel k;
        k.kind = Kind::Linear;
        k.ax = ax_;
        k.ay = ay_;
        k.c = c_;
        return k;
    }

    /// 1D convenience: K(x, y) = a x + b y + c.
    static Kernel linear_1d(double a, double b, double c_ = 0.0) {
        Kernel k;
        k.kind = Kind::Linear;
        k.ax[0][0] = a;
        k.ay[0][0] = b;
        k.c = {c_, 0.0};
        return k;
    }

    static Kernel tanh_difference(double amplitude = 1.0) {
        Kernel k;
        k.kind = Kind::TanhDifference;
        k.amplitude = amplitude;
        return k;
    }

    static Kernel sine_eta(double amplitude) {
        Kernel k;
        k.kind = Kind::SineEta;
        k.amplitude = amplitude;
        return k;
    }

    Point eval(const Point& x, const Point& y, int dim) const {
        switch (kind) {
            case Kind::Zero:
                return Point{0.0, 0.0};
            case Kind::Linear: {
                Point r = mat_apply(ax, x, dim);
                const Point ry = mat_apply(ay, y, dim);
                r[0] += ry[0] + c[0];
                if (dim == 2) r[1] += ry[1] + c[1];
                return r;
            }
            case Kind::TanhDifference:
                return Point{amplitude * std::tanh(x[0] - y[0]), 0.0};
            case Kind::SineEta: {
                const double e = amplitude * std::sin(x[0] - y[1]);
                return Point{e, -e};
            }
        }
        return Point{0.0, 0.0};
    }

    /// Bound on |K(x,y)| over y for bounded kernels, infinity otherwise.
    double sup_norm() const {
        switch (kind) {
            case Kind::TanhDifference:
                return std::fabs(amplitude);
            case Kind::SineEta:
                return std::sqrt(2.0) * std::fabs(amplitude);
            default:
                return std::numeric_limits<double>::infinity();
        }
    }
};

// ---------------------------------------------------------------------------
// Drift model variants
// ---------------------------------------------------------------------------

/// d = 1: b(x, mu) = -x + delta_shift + epsilon * mean(mu).
struct MeanFieldLinear {
    double epsilon = 0.0;
    double delta_shift = 0.0;
};

/// Base drift catalogue for convolution models.
struct BaseDrift {
    enum class Kind { Zero, Linear, CubicConfining };
    Kind kind = Kind::Zero;
    Mat2 m{};           // Linear: b0 = M x + c
    Point c{0.0, 0.0};
    double c1 = 0.0;    // CubicConfining: b0_a = -c1 x_a - c3 x_a^3
    double c3 = 0.0;

    static BaseDrift zero() { return BaseDrift{}; }
    static BaseDrift linear(const Mat2& m_, const Point& c_ = {0.0, 0.0}) {
        BaseDrift b;
        b.kind = Kind::Linear;
        b.m = m_;
        b.c = c_;
        return b;
    }
    static BaseDrift linear_1d(double a, double c_ = 0.0) {
        Mat2 m{};
        m[0][0] = a;
        return linear(m, {c_, 0.0});
    }
    static BaseDrift cubic_confining(double c1_, double c3_) {
        BaseDrift b;
        b.kind = Kind::CubicConfining;
        b.c1 = c1_;
        b.c3 = c3_;
        return b;
    }

    Point eval(const Point& x, int dim) const {
        switch (kind) {
            case Kind::Zero:
                return Point{0.0, 0.0};
            case Kind::Linear: {
                Point r = mat_apply(m, x, dim);
                r[0] += c[0];
                if (dim == 2) r[1] += c[1];
                return r;
            }
            case Kind::CubicConfining: {
                Point r{-c1 * x[0] - c3 * x[0] * x[0] * x[0], 0.0};
                if (dim == 2) r[1] = -c1 * x[1] - c3 * x[1] * x[1] * x[1];
                return r;
            }
        }
        return Point{0.0, 0.0};
    }
};

/// b(x, mu) = b0(x) + epsilon * integral of K(x, y) mu(dy).
struct ConvolutionKernelModel {
    BaseDrift b0;
    Kernel kernel;
    double epsilon = 0.0;
    int dim = 1;
};

/// 2D model with a conserved linear form:
///   b(x, mu) = -R x + (integral of <v,y> mu(dy)) h + epsilon * H_mu(x),
/// where H(x,y) = eta_amplitude * sin(x0 - y1) * (1, -1) is bounded and
/// orthogonal to v. Parameter identities R^T v = lambda v, <v,h> = lambda,
/// <H, v> = 0 and <Rx,x> >= q|x|^2 are verified at construction on random
/// sample points.
struct RvhModel {
    Mat2 r{{{2.0, 0.0}, {0.0, 2.0}}};
    Point v{1.0, 1.0};
    Point h{1.0, 1.0};
    double lambda = 2.0;
    double q = 2.0;
    double epsilon = 0.0;
    double eta_amplitude = 0.0;

    void validate(uint64_t seed = 20240901u, int samples = 100) const {
        if (!(q > 0.0)) throw Error("rvh: q must be positive");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        for (int s = 0; s < samples; ++s) {
            const Point x{u(rng), u(rng)}, y{u(rng), u(rng)};
            // R^T v = lambda v
            const double rtv0 = r[0][0] * v[0] + r[1][0] * v[1];
            const double rtv1 = r[0][1] * v[0] + r[1][1] * v[1];
            if (std::fabs(rtv0 - lambda * v[0]) > 1e-10 || std::fabs(rtv1 - lambda * v[1]) > 1e-10)
                throw Error("rvh: R^T v != lambda v");
            if (std::fabs(v[0] * h[0] + v[1] * h[1] - lambda) > 1e-10) throw Error("rvh: <v,h> != lambda");
            const double eta = eta_amplitude * std::sin(x[0] - y[1]);
            if (std::fabs(eta * v[0] - eta * v[1]) > 1e-10) throw Error("rvh: <H,v> != 0");
            const Point rx = mat_apply(r, x, 2);
            if (rx[0] * x[0] + rx[1] * x[1] < q * norm2sq(x) - 1e-10)
                throw Error("rvh: <Rx,x> >= q|x|^2 violated");
        }
    }

    double sup_h_norm() const { return std::sqrt(2.0) * std::fabs(eta_amplitude); }
};

/// Pure gradient drift b = -grad U with U(x) = sum_a (c1 x_a^2/2 + c3 x_a^4/4).
/// kappa() is the monotonicity constant min U''.
struct GradientConfining {
    double c1 = 1.0;
    double c3 = 0.0;
    int dim = 1;

    Point eval(const Point& x) const {
        Point r{-c1 * x[0] - c3 * x[0] * x[0] * x[0], 0.0};
        if (dim == 2) r[1] = -c1 * x[1] - c3 * x[1] * x[1] * x[1];
        return r;
    }
    double kappa() const { return c1; }
};

using DriftModel = std::variant<MeanFieldLinear, ConvolutionKernelModel, RvhModel, GradientConfining>;

inline int model_dim(const DriftModel& model) {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MeanFieldLinear>)
                return 1;
            else if constexpr (std::is_same_v<T, RvhModel>)
                return 2;
            else if constexpr (std::is_same_v<T, ConvolutionKernelModel>)
                return m.dim;
            else
                return m.dim;
        },
        model);
}

inline double model_epsilon(const DriftModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GradientConfining>)
                return 0.0;
            else
                return m.epsilon;
        },
        model);
}

/// True when the drift does not depend on the measure argument at all.
inline bool measure_independent(const DriftModel& model) {
    return std::visit(
        [](const auto& m) -> bool {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MeanFieldLinear>)
                return m.epsilon == 0.0;
            else if constexpr (std::is_same_v<T, ConvolutionKernelModel>)
                return m.epsilon == 0.0 || m.kernel.kind == Kernel::Kind::Zero;
            else if constexpr (std::is_same_v<T, RvhModel>)
                return false;  // the <v,y> mean term carries no epsilon
            else
                return true;
        },
        model);
}

// ---------------------------------------------------------------------------
// Drift evaluation. The measure enters only through a small set of moments
// (or, for generic kernels, a full quadrature); InteractionState caches them
// so a whole field evaluation computes the convolution once.
// ---------------------------------------------------------------------------

struct InteractionState {
    Point mean{0.0, 0.0};
    double eta_sin = 0.0;  // E[sin y1]
    double eta_cos = 0.0;  // E[cos y1]
    const DensityField* measure = nullptr;  // generic kernels keep the table
};

inline InteractionState compute_interaction(const DriftModel& model, const DensityField& mu) {
    InteractionState st;
    st.mean[0] = mean_axis(mu, 0);
    if (mu.grid.dim == 2) st.mean[1] = mean_axis(mu, 1);
    if (const auto* rvh = std::get_if<RvhModel>(&model)) {
        if (rvh->eta_amplitude != 0.0) {
            st.eta_sin = integrate_functional(mu, [](const Point& y) { return std::sin(y[1]); });
            st.eta_cos = integrate_functional(mu, [](const Point& y) { return std::cos(y[1]); });
        }
    }
    if (const auto* ck = std::get_if<ConvolutionKernelModel>(&model)) {
        if (ck->kernel.kind == Kernel::Kind::SineEta) {
            st.eta_sin = integrate_functional(mu, [](const Point& y) { return std::sin(y[1]); });
            st.eta_cos = integrate_functional(mu, [](const Point& y) { return std::cos(y[1]); });
        } else if (ck->kernel.kind == Kernel::Kind::TanhDifference) {
            st.measure = &mu;
        }
    }
    return st;
}

inline Point eval_drift_cached(const DriftModel& model, const Point& x, const InteractionState& st) {
    if (const auto* mfl = std::get_if<MeanFieldLinear>(&model)) {
        return Point{-x[0] + mfl->delta_shift + mfl->epsilon * st.mean[0], 0.0};
    }
    if (const auto* gc = std::get_if<GradientConfining>(&model)) {
        return gc->eval(x);
    }
    if (const auto* rvh = std::get_if<RvhModel>(&model)) {
        const Point rx = mat_apply(rvh->r, x, 2);
        const double qv = rvh->v[0] * st.mean[0] + rvh->v[1] * st.mean[1];
        // E[sin(x0 - y1)] = sin x0 E[cos y1] - cos x0 E[sin y1]
        const double eta =
            rvh->eta_amplitude * (std::sin(x[0]) * st.eta_cos - std::cos(x[0]) * st.eta_sin);
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
            const double eta =
                ck.kernel.amplitude * (std::sin(x[0]) * st.eta_cos - std::cos(x[0]) * st.eta_sin);
            b[0] += ck.epsilon * eta;
            b[1] -= ck.epsilon * eta;
            break;
        }
        case Kernel::Kind::TanhDifference: {
            const DensityField& mu = *st.measure;
            long double s = 0.0L;
            for (int j = 0; j < mu.grid.size(); ++j)
                s += std::tanh(x[0] - mu.grid.center(0, j % mu.grid.nx())) * mu.values[j];
            b[0] += ck.epsilon * ck.kernel.amplitude * static_cast<double>(s) * mu.grid.cell_volume();
            break;
        }
    }
    return b;
}

/// b(x, mu) for a single point.
inline Point eval_drift(const DriftModel& model, const Point& x, const DensityField& mu) {
    return eval_drift_cached(model, x, compute_interaction(model, mu));
}

/// Tabulate b(., mu) at every cell center. The measure-dependent part of the
/// drift is computed once, then reused across cells.
inline VectorField drift_field(const DriftModel& model, const DensityField& mu) {
    const InteractionState st = compute_interaction(model, mu);
    VectorField out(mu.grid);
    const int n = mu.grid.size();
    parallel_for(0, n, [&](int i) {
        const Point b = eval_drift_cached(model, mu.grid.cell_center(i), st);
        out.comp[0][i] = b[0];
        if (mu.grid.dim == 2) out.comp[1][i] = b[1];
    });
    return out;
}

/// The kernel of the pairwise conserved/subinvariant identity, under the
/// sign convention b(x, mu) = -integral of K(x, y) mu(dy).
inline std::function<Point(const Point&, const Point&)> membership_kernel(const DriftModel& model) {
    if (const auto* mfl = std::get_if<MeanFieldLinear>(&model)) {
        const double eps = mfl->epsilon, d = mfl->delta_shift;
        return [eps, d](const Point& x, const Point& y) { return Point{x[0] - eps * y[0] - d, 0.0}; };
    }
    if (const auto* gc = std::get_if<GradientConfining>(&model)) {
        const GradientConfining g = *gc;
        return [g](const Point& x, const Point&) {
            Point b = g.eval(x);
            return Point{-b[0], -b[1]};
        };
    }
    if (const auto* rvh = std::get_if<RvhModel>(&model)) {
        const RvhModel m = *rvh;
        return [m](const Point& x, const Point& y) {
            const Point rx = mat_apply(m.r, x, 2);
            const double vy = m.v[0] * y[0] + m.v[1] * y[1];
            const double eta = m.eta_amplitude * std::sin(x[0] - y[1]);
            return Point{rx[0] - vy * m.h[0] - m.epsilon * eta, rx[1] - vy * m.h[1] + m.epsilon * eta};
        };
    }
    const auto ck = std::get<ConvolutionKernelModel>(model);
    return [ck](const Point& x, const Point& y) {
        const Point b0 = ck.b0.eval(x, ck.dim);
        const Point k = ck.kernel.eval(x, y, ck.dim);
        return Point{-b0[0] - ck.epsilon * k[0], -b0[1] - ck.epsilon * k[1]};
    };
}

}  // namespace fpklab
