#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fpklab/errors.hpp"

namespace fpklab {

/// A point of the (at most two-dimensional) state space. In 1D the second
/// component is zero and ignored.
using Point = std::array<double, 2>;

inline double norm2sq(const Point& p) { return p[0] * p[0] + p[1] * p[1]; }

/// Uniform rectangular grid over a box truncation of the state space.
/// Cell-centered (finite volume): values live at cell centers, quadrature is
/// the midpoint rule, so the mass of a field is exactly sum * cell_volume.
struct GridSpec {
    int dim = 1;
    std::array<double, 2> lower{{0.0, 0.0}};
    std::array<double, 2> upper{{0.0, 0.0}};
    std::array<int, 2> cells{{0, 1}};

    static GridSpec make_1d(double lo, double hi, int n) {
        GridSpec g;
        g.dim = 1;
        g.lower = {lo, 0.0};
        g.upper = {hi, 0.0};
        g.cells = {n, 1};
        g.validate();
        return g;
    }

    static GridSpec make_2d(double lo0, double hi0, int n0, double lo1, double hi1, int n1) {
        GridSpec g;
        g.dim = 2;
        g.lower = {lo0, lo1};
        g.upper = {hi0, hi1};
        g.cells = {n0, n1};
        g.validate();
        return g;
    }

    void validate() const {
        if (dim != 1 && dim != 2)
            throw DimensionUnsupportedError("grid: only dim 1 or 2 supported, got " + std::to_string(dim));
        for (int a = 0; a < dim; ++a) {
            if (!(upper[a] > lower[a]))
                throw Error("grid: upper must exceed lower on axis " + std::to_string(a));
            if (cells[a] < 8)
                throw Error("grid: at least 8 cells per axis required, got " + std::to_string(cells[a]));
        }
        if (dim == 1 && cells[1] != 1) throw Error("grid: 1D grid must have cells[1] == 1");
    }

    double h(int axis) const { return (upper[axis] - lower[axis]) / cells[axis]; }

    double cell_volume() const {
        double v = h(0);
        if (dim == 2) v *= h(1);
        return v;
    }

    int nx() const { return cells[0]; }
    int ny() const { return cells[1]; }
    int size() const { return cells[0] * cells[1]; }

    double center(int axis, int i) const { return lower[axis] + (i + 0.5) * h(axis); }

    int index(int ix, int iy) const { return ix + cells[0] * iy; }

    Point cell_center(int flat) const {
        const int ix = flat % cells[0];
        const int iy = flat / cells[0];
        Point p{center(0, ix), 0.0};
        if (dim == 2) p[1] = center(1, iy);
        return p;
    }

    bool operator==(const GridSpec& o) const {
        return dim == o.dim && lower == o.lower && upper == o.upper && cells == o.cells;
    }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
    if (a != b) throw GridMismatchError("fields live on different grids");
}

/// A probability density tabulated on a grid (cell-center values).
struct DensityField {
    GridSpec grid;
    std::vector<double> values;

    DensityField() = default;
    explicit DensityField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double mass() const {
        long double s = 0.0L;
        for (double v : values) s += v;
        return static_cast<double>(s) * grid.cell_volume();
    }
};

/// A vector field tabulated at cell centers, one component array per axis.
struct VectorField {
    GridSpec grid;
    std::array<std::vector<double>, 2> comp;

    VectorField() = default;
    explicit VectorField(const GridSpec& g) : grid(g) {
        comp[0].assign(g.size(), 0.0);
        if (g.dim == 2) comp[1].assign(g.size(), 0.0);
    }

    double max_norm() const {
        double m = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            double n2 = comp[0][i] * comp[0][i];
            if (grid.dim == 2) n2 += comp[1][i] * comp[1][i];
            m = std::max(m, n2);
        }
        return std::sqrt(m);
    }
};

}  // namespace fpklab
