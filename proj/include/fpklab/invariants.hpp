#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fpklab/drift.hpp"
#include "fpklab/functions.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/trajectory.hpp"
#include "fpklab/weights.hpp"

namespace fpklab {

enum class InvariantClass { I0, Iplus, Neither };

inline const char* to_string(InvariantClass c) {
    switch (c) {
        case InvariantClass::I0:
            return "I0";
        case InvariantClass::Iplus:
            return "Iplus";
        default:
            return "Neither";
    }
}

/// Classification of a test function as conserved (I0), exponentially
/// growing (Iplus, with rate lambda), or neither, via the pairwise kernel
/// identity for drifts of the form b(x, mu) = -integral K(x,y) mu(dy).
struct InvariantReport {
    std::string psi_name;
    InvariantClass cls = InvariantClass::Neither;
    double lambda = 0.0;
    double max_residual = 0.0;  // residual of the classifying identity
    double i0_residual = 0.0;   // residual of the conserved identity
    double growth_ratio = 0.0;  // sup (|psi| + |grad psi| + |D2 psi|) / W over the box
    bool growth_bounded = true;
    int samples = 0;
};

using KernelFn = std::function<Point(const Point&, const Point&)>;

/// Evaluate the pairwise identity residual and classify. The sample set is
/// uniform over the box and always includes diagonal pairs (x, x), since the
/// diagonal identity is the necessary condition that fixes lambda.
inline InvariantReport check_membership(const ScalarFunction& psi, const KernelFn& kernel, int dim,
                                        const GridSpec& box, const DiffusionSpec& a,
                                        std::optional<double> candidate_lambda = std::nullopt, int samples = 200,
                                        uint64_t seed = 17u, const WeightFunction& w = WeightFunction(),
                                        double tol = 1e-10) {
    if (!psi.smooth()) throw NonSmoothPsiError("check_membership: psi lacks derivative evaluators");
    if (!a.is_identity())
        throw AnisotropicDiffusionError("check_membership: the pairwise identity is stated for A = I");

    std::mt19937_64 rng(seed);
    std::array<std::uniform_real_distribution<double>, 2> u{
        std::uniform_real_distribution<double>(box.lower[0], box.upper[0]),
        std::uniform_real_distribution<double>(box.lower[1], box.upper[1])};
    auto draw = [&]() {
        Point p{u[0](rng), 0.0};
        if (dim == 2) p[1] = u[1](rng);
        return p;
    };

    InvariantReport rep;
    rep.psi_name = psi.name;
    rep.samples = samples;

    auto pair_lhs = [&](const Point& x, const Point& y) {
        const Point kx = kernel(x, y), ky = kernel(y, x);
        const Point gx = psi.gradient(x), gy = psi.gradient(y);
        double v = psi.laplacian(x) + psi.laplacian(y);
        v -= kx[0] * gx[0] + ky[0] * gy[0];
        if (dim == 2) v -= kx[1] * gx[1] + ky[1] * gy[1];
        return v;
    };

    // lambda from the diagonal identity by least squares, unless supplied
    double lambda = candidate_lambda.value_or(0.0);
    if (!candidate_lambda) {
        double num = 0.0, den = 0.0;
        for (int s = 0; s < 50; ++s) {
            const Point x = draw();
            const double g = 0.5 * pair_lhs(x, x);  // diagonal: Lap psi - <K(x,x), grad psi>
            const double p = psi(x);
            num += p * g;
            den += p * p;
        }
        lambda = den > 0.0 ? num / den : 0.0;
    }

    double res_i0 = 0.0, res_lam = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Point x = draw();
        const Point y = (s % 4 == 0) ? x : draw();  // include the diagonal
        const double lhs = pair_lhs(x, y);
        res_i0 = std::max(res_i0, std::fabs(lhs));
        res_lam = std::max(res_lam, std::fabs(lhs - lambda * (psi(x) + psi(y))));
    }
    rep.i0_residual = res_i0;

    // growth condition: psi and its derivatives dominated by W on the box
    double inner = 0.0, outer = 0.0;
    const int nr = 64;
    for (int k = 1; k <= nr; ++k) {
        const double t = static_cast<double>(k) / nr;
        Point x{t * box.upper[0], 0.0};
        if (dim == 2) x[1] = t * box.upper[1];
        const Point g = psi.gradient(x);
        const double gn = std::sqrt(g[0] * g[0] + (dim == 2 ? g[1] * g[1] : 0.0));
        const double ratio = (std::fabs(psi(x)) + gn + std::fabs(psi.hessian_max(x))) / w.W(x);
        if (k <= (3 * nr) / 4)
            inner = std::max(inner, ratio);
        else
            outer = std::max(outer, ratio);
    }
    rep.growth_ratio = std::max(inner, outer);
    rep.growth_bounded = outer <= 1.5 * std::max(inner, 1e-30);

    if (res_i0 <= tol) {
        rep.cls = InvariantClass::I0;
        rep.lambda = 0.0;
        rep.max_residual = res_i0;
    } else if (lambda > 0.0 && res_lam <= tol) {
        rep.cls = InvariantClass::Iplus;
        rep.lambda = lambda;
        rep.max_residual = res_lam;
    } else {
        rep.cls = InvariantClass::Neither;
        rep.lambda = lambda;
        rep.max_residual = std::min(res_i0, res_lam);
    }
    return rep;
}

/// Time series of mu_t(psi) with the best-fitting law among
/// {constant nu(psi), exponential nu(psi) e^{lambda t}}.
struct FunctionalTrack {
    std::vector<double> times;
    std::vector<double> values;
    std::string law;  // "constant" or "exponential"
    double nu_psi = 0.0;
    double lambda = 0.0;
    double rel_deviation = 0.0;
};

inline FunctionalTrack track_functional(const Trajectory& traj, const ScalarFunction& psi) {
    if (traj.snapshots.empty()) throw EmptyTrajectoryError("track_functional: empty trajectory");
    FunctionalTrack tr;
    tr.times = traj.snap_times;
    tr.values.reserve(traj.snapshots.size());
    for (const auto& s : traj.snapshots)
        tr.values.push_back(integrate_functional(s, [&psi](const Point& p) { return psi(p); }));
    tr.nu_psi = tr.values.front();

    const double scale = std::max(std::fabs(tr.nu_psi), 1e-12);
    double dev_const = 0.0;
    for (double v : tr.values) dev_const = std::max(dev_const, std::fabs(v - tr.nu_psi) / scale);

    double dev_exp = std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    const bool sign_ok =
        std::fabs(tr.nu_psi) > 1e-12 &&
        std::all_of(tr.values.begin(), tr.values.end(), [&](double v) { return v * tr.nu_psi > 0.0; });
    if (sign_ok) {
        // least squares on log |values| with the intercept free
        double st = 0, sl = 0, stt = 0, stl = 0;
        const size_t n = tr.values.size();
        for (size_t i = 0; i < n; ++i) {
            const double l = std::log(std::fabs(tr.values[i]));
            st += tr.times[i];
            sl += l;
            stt += tr.times[i] * tr.times[i];
            stl += tr.times[i] * l;
        }
        const double denom = n * stt - st * st;
        if (denom > 0.0) {
            lambda = (n * stl - st * sl) / denom;
            dev_exp = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double pred = tr.nu_psi * std::exp(lambda * tr.times[i]);
                dev_exp = std::max(dev_exp, std::fabs(tr.values[i] - pred) /
                                                std::max(std::fabs(pred), scale));
            }
        }
    }
    if (dev_exp < dev_const && std::fabs(lambda) > 1e-8) {
        tr.law = "exponential";
        tr.lambda = lambda;
        tr.rel_deviation = dev_exp;
    } else {
        tr.law = "constant";
        tr.lambda = 0.0;
        tr.rel_deviation = dev_const;
    }
    return tr;
}

/// A basis function together with its validated classification.
struct ClassifiedFunction {
    ScalarFunction psi;
    InvariantClass cls = InvariantClass::Neither;
    double lambda = 0.0;
};

/// First basis function whose conserved (or vanishing) value separates nu
/// from mu; absence of a witness is not a convergence proof.
inline std::optional<ClassifiedFunction> nonconvergence_witness(const DensityField& nu, const DensityField& mu,
                                                                const std::vector<ClassifiedFunction>& basis,
                                                                double tol = 1e-6) {
    for (const auto& f : basis) {
        const auto eval = [&](const DensityField& d) {
            return integrate_functional(d, [&f](const Point& p) { return f.psi(p); });
        };
        if (f.cls == InvariantClass::I0 && std::fabs(eval(nu) - eval(mu)) > tol) return f;
        if (f.cls == InvariantClass::Iplus && std::fabs(eval(nu)) > tol) return f;
    }
    return std::nullopt;
}

/// A conserved constraint functional h with the affine decomposition
/// L_sigma psi = C1(sigma) h + C2(sigma) that makes the solution map
/// preserve mu(h).
struct ConservedFunctional {
    ScalarFunction h;
    ScalarFunction psi;
    std::function<double(const DensityField&)> c1;
    std::function<double(const DensityField&)> c2;
};

/// The catalogued conserved set of a model (empty when none is known).
inline std::vector<ConservedFunctional> conserved_basis(const DriftModel& model) {
    std::vector<ConservedFunctional> out;
    if (const auto* mfl = std::get_if<MeanFieldLinear>(&model)) {
        if (mfl->epsilon == 1.0 && mfl->delta_shift == 0.0) {
            ConservedFunctional f;
            f.h = psi_monomial(1);
            f.psi = psi_monomial(1);
            f.c1 = [](const DensityField&) { return -1.0; };
            f.c2 = [](const DensityField& s) { return mean_axis(s, 0); };
            out.push_back(std::move(f));
        }
    } else if (const auto* rvh = std::get_if<RvhModel>(&model)) {
        ConservedFunctional f;
        f.h = psi_linear_form(rvh->v);
        f.psi = psi_linear_form(rvh->v);
        const double lambda = rvh->lambda;
        const Point v = rvh->v;
        f.c1 = [lambda](const DensityField&) { return -lambda; };
        f.c2 = [lambda, v](const DensityField& s) {
            return lambda * (v[0] * mean_axis(s, 0) + v[1] * mean_axis(s, 1));
        };
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace fpklab
