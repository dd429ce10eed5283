#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"

namespace fpklab {

/// A scalar test function with closed-form derivatives. Gradient and
/// Laplacian evaluators may be absent for value-only functionals; the
/// invariant classifier requires them.
struct ScalarFunction {
    std::string name;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    std::function<double(const Point&)> laplacian;
    std::function<double(const Point&)> hessian_max;  // max abs entry of D^2

    bool smooth() const { return static_cast<bool>(gradient) && static_cast<bool>(laplacian); }
    double operator()(const Point& p) const { return value(p); }
};

/// x0^k on the first axis (the 1D monomial family).
inline ScalarFunction psi_monomial(int k) {
    ScalarFunction f;
    f.name = "monomial_" + std::to_string(k);
    f.value = [k](const Point& p) { return std::pow(p[0], k); };
    f.gradient = [k](const Point& p) {
        return Point{k == 0 ? 0.0 : k * std::pow(p[0], k - 1), 0.0};
    };
    f.laplacian = [k](const Point& p) {
        return k < 2 ? 0.0 : static_cast<double>(k) * (k - 1) * std::pow(p[0], k - 2);
    };
    f.hessian_max = f.laplacian;
    return f;
}

/// Linear form <v, x>.
inline ScalarFunction psi_linear_form(const Point& v) {
    ScalarFunction f;
    f.name = "linear_form";
    f.value = [v](const Point& p) { return v[0] * p[0] + v[1] * p[1]; };
    f.gradient = [v](const Point&) { return v; };
    f.laplacian = [](const Point&) { return 0.0; };
    f.hessian_max = [](const Point&) { return 0.0; };
    return f;
}

/// Exponential exp(<c, x>).
inline ScalarFunction psi_exponential(const Point& c) {
    ScalarFunction f;
    f.name = "exponential";
    f.value = [c](const Point& p) { return std::exp(c[0] * p[0] + c[1] * p[1]); };
    f.gradient = [c, f](const Point& p) {
        const double e = f.value(p);
        return Point{c[0] * e, c[1] * e};
    };
    f.laplacian = [c, f](const Point& p) { return (c[0] * c[0] + c[1] * c[1]) * f.value(p); };
    f.hessian_max = [c, f](const Point& p) {
        const double m = std::max({std::fabs(c[0] * c[0]), std::fabs(c[0] * c[1]), std::fabs(c[1] * c[1])});
        return m * f.value(p);
    };
    return f;
}

inline ScalarFunction psi_by_name(const std::string& name, const Point& param) {
    if (name == "monomial") return psi_monomial(static_cast<int>(param[0]));
    if (name == "linear-form" || name == "linear_form") return psi_linear_form(param);
    if (name == "exponential") return psi_exponential(param);
    throw Error("unknown basis function '" + name + "' (catalogue: monomial, linear-form, exponential)");
}

}  // namespace fpklab
