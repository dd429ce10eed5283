#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"

namespace fpklab {

/// Lyapunov pair V(x) = (1+|x|^2)^m and weight W = V^gamma.
/// V >= 1, coercive; W defines the weighted total-variation norm used
/// throughout the convergence diagnostics.
struct WeightFunction {
    double m = 1.0;
    double gamma = 0.5;

    WeightFunction() = default;
    WeightFunction(double m_, double gamma_) : m(m_), gamma(gamma_) {
        if (!(m >= 0.5)) throw Error("weight: moment order m must be >= 1/2");
        if (!(gamma > 0.0 && gamma <= 0.5)) throw Error("weight: gamma must lie in (0, 1/2]");
    }

    double V(const Point& x) const { return std::pow(1.0 + norm2sq(x), m); }
    double W(const Point& x) const { return std::pow(1.0 + norm2sq(x), m * gamma); }

    /// Gradient of V, exact.
    Point gradV(const Point& x, int dim) const {
        const double s = 1.0 + norm2sq(x);
        const double f = 2.0 * m * std::pow(s, m - 1.0);
        Point g{f * x[0], 0.0};
        if (dim == 2) g[1] = f * x[1];
        return g;
    }

    /// Second partial d^2 V / dx_a^2, exact.
    double d2V(const Point& x, int axis) const {
        const double s = 1.0 + norm2sq(x);
        return 2.0 * m * std::pow(s, m - 1.0) + 4.0 * m * (m - 1.0) * std::pow(s, m - 2.0) * x[axis] * x[axis];
    }
};

/// Constant diagonal diffusion matrix. The interface carries the ellipticity
/// bound K1 (K1^{-1} I <= A <= K1 I) and the Lipschitz bound K2, which is
/// zero for constant coefficients.
struct DiffusionSpec {
    std::array<double, 2> a{{1.0, 1.0}};

    DiffusionSpec() = default;
    explicit DiffusionSpec(double iso) : a{{iso, iso}} { check(); }
    DiffusionSpec(double a0, double a1) : a{{a0, a1}} { check(); }

    void check() const {
        if (!(a[0] > 0.0) || !(a[1] > 0.0)) throw Error("diffusion: diagonal entries must be positive");
    }

    double k1() const { return std::max({a[0], a[1], 1.0 / a[0], 1.0 / a[1]}); }
    static constexpr double k2() { return 0.0; }

    double max_entry() const { return std::max(a[0], a[1]); }
    bool is_identity() const { return a[0] == 1.0 && a[1] == 1.0; }
};

}  // namespace fpklab
