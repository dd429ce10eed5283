#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/weights.hpp"

namespace fpklab {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Rescale a nonnegative field to unit quadrature mass.
inline DensityField normalize(const DensityField& field) {
    const double m = field.mass();
    if (!(m > 1e-300)) throw ZeroMassError("normalize: total mass below 1e-300");
    DensityField out = field;
    const double inv = 1.0 / m;
    for (double& v : out.values) v *= inv;
    return out;
}

/// Midpoint quadrature of the integral of phi against the field,
/// second-order accurate for smooth phi.
inline double integrate_functional(const DensityField& field, const std::function<double(const Point&)>& phi) {
    long double s = 0.0L;
    const int n = field.grid.size();
    for (int i = 0; i < n; ++i) s += static_cast<long double>(phi(field.grid.cell_center(i))) * field.values[i];
    return static_cast<double>(s) * field.grid.cell_volume();
}

inline double mean_axis(const DensityField& field, int axis) {
    return integrate_functional(field, [axis](const Point& p) { return p[axis]; });
}

inline double raw_second_moment_axis(const DensityField& field, int axis) {
    return integrate_functional(field, [axis](const Point& p) { return p[axis] * p[axis]; });
}

inline double variance_axis(const DensityField& field, int axis) {
    const double m = mean_axis(field, axis);
    return raw_second_moment_axis(field, axis) - m * m;
}

inline double v_moment(const DensityField& field, const WeightFunction& w) {
    return integrate_functional(field, [&w](const Point& p) { return w.V(p); });
}

/// Weighted total-variation distance between two tabulated densities:
/// quadrature of W(x) |rho_mu - rho_sigma|.
inline double weighted_tv(const DensityField& mu, const DensityField& sigma, const WeightFunction& w) {
    require_same_grid(mu.grid, sigma.grid);
    long double s = 0.0L;
    const int n = mu.grid.size();
    for (int i = 0; i < n; ++i)
        s += static_cast<long double>(w.W(mu.grid.cell_center(i))) * std::fabs(mu.values[i] - sigma.values[i]);
    return static_cast<double>(s) * mu.grid.cell_volume();
}

/// Unweighted total-variation distance (W == 1).
inline double total_variation(const DensityField& mu, const DensityField& sigma) {
    require_same_grid(mu.grid, sigma.grid);
    long double s = 0.0L;
    for (int i = 0; i < mu.grid.size(); ++i) s += std::fabs(mu.values[i] - sigma.values[i]);
    return static_cast<double>(s) * mu.grid.cell_volume();
}

/// Kantorovich distance in one dimension via the CDF formula:
/// W1 = integral of |F_mu - F_sigma|, the dual of the Lipschitz supremum.
inline double w1_1d(const DensityField& mu, const DensityField& sigma) {
    if (mu.grid.dim != 1) throw DimensionUnsupportedError("w1_1d: only 1D supported");
    require_same_grid(mu.grid, sigma.grid);
    const double h = mu.grid.h(0);
    long double fmu = 0.0L, fsg = 0.0L, acc = 0.0L;
    // CDF difference evaluated at interior cell faces, integrated face by face.
    for (int i = 0; i + 1 < mu.grid.nx(); ++i) {
        fmu += mu.values[i] * h;
        fsg += sigma.values[i] * h;
        acc += std::fabs(static_cast<double>(fmu - fsg));
    }
    return static_cast<double>(acc) * h;
}

/// Tabulate a normalized (product) Gaussian. Throws MassLeakage when more
/// than 1e-8 of the analytic mass lies outside the grid box.
inline DensityField make_gaussian(const GridSpec& grid, const Point& mean, const Point& variance) {
    for (int a = 0; a < grid.dim; ++a) {
        if (!(variance[a] > 0.0)) throw Error("make_gaussian: variance must be positive");
        if (!(mean[a] > grid.lower[a] && mean[a] < grid.upper[a]))
            throw Error("make_gaussian: mean must lie in the grid interior");
    }
    double inside = 1.0;
    for (int a = 0; a < grid.dim; ++a) {
        const double sd = std::sqrt(variance[a]);
        inside *= normal_cdf((grid.upper[a] - mean[a]) / sd) - normal_cdf((grid.lower[a] - mean[a]) / sd);
    }
    if (1.0 - inside > 1e-8)
        throw MassLeakageError("make_gaussian: analytic mass outside grid exceeds 1e-8 (" +
                               std::to_string(1.0 - inside) + ")");
    DensityField out(grid);
    for (int i = 0; i < grid.size(); ++i) {
        const Point p = grid.cell_center(i);
        double v = 1.0;
        for (int a = 0; a < grid.dim; ++a) {
            const double z = p[a] - mean[a];
            v *= std::exp(-0.5 * z * z / variance[a]) / std::sqrt(2.0 * M_PI * variance[a]);
        }
        out.values[i] = v;
    }
    return normalize(out);
}

inline DensityField make_gaussian_1d(const GridSpec& grid, double mean, double variance) {
    return make_gaussian(grid, Point{mean, 0.0}, Point{variance, 1.0});
}

/// Convex combination (1-theta) a + theta b followed by renormalization.
inline DensityField blend(const DensityField& a, const DensityField& b, double theta) {
    require_same_grid(a.grid, b.grid);
    DensityField out(a.grid);
    for (int i = 0; i < a.grid.size(); ++i) out.values[i] = (1.0 - theta) * a.values[i] + theta * b.values[i];
    return normalize(out);
}

}  // namespace fpklab
