#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fpklab/drift.hpp"
#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/hconditions.hpp"
#include "fpklab/linear_solver.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/particles.hpp"
#include "fpklab/weights.hpp"

namespace fpklab {

// ---------------------------------------------------------------------------
// Config dialect: INI-style sections of key = value lines. '#' and ';' start
// comments, values may be comma-separated lists; mixture components are
// separated by ';'. The dialect is documented in the README and stable.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct IniEntry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct IniFile {
    // section -> key -> entry
    std::map<std::string, std::map<std::string, IniEntry>> sections;
    std::map<std::string, int> section_lines;

    bool has(const std::string& sec) const { return sections.count(sec) != 0; }

    const IniEntry* find(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    std::string require(const std::string& sec, const std::string& key) const {
        const IniEntry* e = find(sec, key);
        if (!e) throw ConfigError("missing required key '" + key + "' in section [" + sec + "]", 0, sec + "." + key);
        return e->value;
    }

    std::string get_or(const std::string& sec, const std::string& key, const std::string& def) const {
        const IniEntry* e = find(sec, key);
        return e ? e->value : def;
    }

    void check_all_used() const {
        for (const auto& [sec, keys] : sections)
            for (const auto& [key, entry] : keys)
                if (!entry.used)
                    throw ConfigError("unknown key '" + key + "' in section [" + sec + "]", entry.line,
                                      sec + "." + key);
    }
};

inline IniFile parse_ini(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no);
            ini.sections[section];
            ini.section_lines.emplace(section, line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        if (section.empty()) throw ConfigError("key outside any section", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (ini.sections[section].count(key)) throw ConfigError("duplicate key '" + key + "'", line_no, key);
        ini.sections[section][key] = IniEntry{value, line_no, false};
    }
    return ini;
}

inline double to_double(const std::string& v, const std::string& where, int line) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected a number for " + where + ", got '" + v + "'", line, where);
    }
}

inline long to_long(const std::string& v, const std::string& where, int line) {
    try {
        size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer for " + where + ", got '" + v + "'", line, where);
    }
}

inline std::vector<std::string> split(const std::string& v, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

inline std::vector<double> to_doubles(const std::string& v, const std::string& where, int line) {
    std::vector<double> out;
    for (const auto& tok : split(v, ',')) out.push_back(to_double(tok, where, line));
    return out;
}

}  // namespace detail

enum class AnalysisKind {
    Evolve,
    Stationary,
    BranchSweep,
    Invariants,
    Conditions,
    DecayFit,
    W1Check,
    Particles,
    CrossValidate,
};

inline const char* to_string(AnalysisKind k) {
    switch (k) {
        case AnalysisKind::Evolve: return "evolve";
        case AnalysisKind::Stationary: return "stationary";
        case AnalysisKind::BranchSweep: return "branch-sweep";
        case AnalysisKind::Invariants: return "invariants";
        case AnalysisKind::Conditions: return "conditions";
        case AnalysisKind::DecayFit: return "decay-fit";
        case AnalysisKind::W1Check: return "w1-check";
        case AnalysisKind::Particles: return "particles";
        case AnalysisKind::CrossValidate: return "cross-validate";
    }
    return "?";
}

inline AnalysisKind analysis_from_string(const std::string& s, int line) {
    for (AnalysisKind k :
         {AnalysisKind::Evolve, AnalysisKind::Stationary, AnalysisKind::BranchSweep, AnalysisKind::Invariants,
          AnalysisKind::Conditions, AnalysisKind::DecayFit, AnalysisKind::W1Check, AnalysisKind::Particles,
          AnalysisKind::CrossValidate})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown analysis '" + s + "'", line, "run.analyses");
}

/// Initial condition descriptor.
struct InitialCondition {
    enum class Kind { Gaussian, Mixture, Uniform, PointMass };
    Kind kind = Kind::Gaussian;
    Point mean{0.0, 0.0};
    Point variance{1.0, 1.0};
    std::vector<double> weights;      // mixture
    std::vector<Point> comp_means;    // mixture
    std::vector<Point> comp_vars;     // mixture
    Point lo{0.0, 0.0}, hi{1.0, 1.0};  // uniform

    DensityField to_density(const GridSpec& grid) const {
        switch (kind) {
            case Kind::Gaussian:
                return make_gaussian(grid, mean, variance);
            case Kind::Mixture: {
                DensityField f(grid);
                double wsum = 0.0;
                for (double w : weights) wsum += w;
                for (size_t j = 0; j < weights.size(); ++j) {
                    const DensityField g = make_gaussian(grid, comp_means[j], comp_vars[j]);
                    for (int i = 0; i < grid.size(); ++i) f.values[i] += weights[j] / wsum * g.values[i];
                }
                return normalize(f);
            }
            case Kind::Uniform: {
                DensityField f(grid);
                for (int i = 0; i < grid.size(); ++i) {
                    const Point p = grid.cell_center(i);
                    bool in = true;
                    for (int a = 0; a < grid.dim; ++a) in = in && p[a] >= lo[a] && p[a] <= hi[a];
                    f.values[i] = in ? 1.0 : 0.0;
                }
                return normalize(f);
            }
            case Kind::PointMass: {
                DensityField f(grid);
                int idx[2] = {0, 0};
                for (int a = 0; a < grid.dim; ++a) {
                    idx[a] = std::clamp(static_cast<int>((mean[a] - grid.lower[a]) / grid.h(a)), 0,
                                        grid.cells[a] - 1);
                }
                f.values[grid.index(idx[0], grid.dim == 2 ? idx[1] : 0)] = 1.0;
                return normalize(f);
            }
        }
        throw Error("unreachable");
    }

    Sampler to_sampler(int dim) const {
        switch (kind) {
            case Kind::Gaussian:
                return gaussian_sampler(mean, variance, dim);
            case Kind::Uniform:
                return uniform_sampler(lo, hi, dim);
            case Kind::PointMass:
                return point_sampler(mean);
            case Kind::Mixture: {
                auto weights_ = weights;
                auto means_ = comp_means;
                auto vars_ = comp_vars;
                double wsum = 0.0;
                for (double w : weights_) wsum += w;
                return [weights_, means_, vars_, wsum, dim](std::mt19937_64& rng) {
                    std::uniform_real_distribution<double> u(0.0, wsum);
                    double r = u(rng);
                    size_t j = 0;
                    while (j + 1 < weights_.size() && r > weights_[j]) r -= weights_[j], ++j;
                    return gaussian_sampler(means_[j], vars_[j], dim)(rng);
                };
            }
        }
        throw Error("unreachable");
    }
};

struct DecayFitParams {
    std::string reference = "gaussian";  // or "stationary"
    Point ref_mean{0.0, 0.0};
    Point ref_variance{1.0, 1.0};
    std::optional<std::pair<double, double>> window;
};

struct W1CheckParams {
    std::string reference = "gaussian";
    Point ref_mean{0.0, 0.0};
    Point ref_variance{1.0, 1.0};
    std::optional<double> kappa;  // absent = derive from the model
    std::optional<double> c_lip;
};

struct ConditionsParams {
    std::string constants = "closed-form";  // closed-form | auto | explicit
    double q = 0.0;
    int measures = 10;
    int points = 10000;
    std::optional<HConstants> explicit_constants;
    uint64_t seed = 23;
};

struct StationaryParams {
    double tol = 1e-9;
    int max_iterations = 60;
    double damping = 1.0;
    std::optional<double> constraint_q;
    std::optional<Point> guess_mean;
    Point guess_variance{1.0, 1.0};
};

struct BranchParams {
    std::vector<double> q_values;
};

struct ParticlesParams {
    int n = 10000;
    double dt = 0.01;
    std::vector<uint64_t> seeds{1};
    bool smooth = true;
};

struct InvariantsParams {
    bool track_mean = true;
    double witness_tol = 1e-3;
    // catalogue entries "monomial:k", "linear-form:v0,v1", "exponential:c0,c1";
    // empty selects a default basis for the model
    std::vector<std::pair<std::string, Point>> basis;
};

/// A declarative scenario: model, grid, initial data and the analyses to run.
struct Scenario {
    std::string raw_text;
    GridSpec grid;
    WeightFunction weight;
    DiffusionSpec diffusion;
    DriftModel drift{MeanFieldLinear{}};
    InitialCondition initial;
    SolveConfig solve;
    std::vector<AnalysisKind> analyses;
    std::string output_dir = "out";
    uint64_t seed = 1;
    bool emit_snapshots = false;

    DecayFitParams decay;
    W1CheckParams w1;
    ConditionsParams conditions;
    StationaryParams stationary;
    BranchParams branch;
    ParticlesParams particles;
    InvariantsParams invariants;

    bool has(AnalysisKind k) const { return std::count(analyses.begin(), analyses.end(), k) > 0; }
};

namespace detail {

inline Point point_from(const std::vector<double>& v, int dim, const std::string& where, int line) {
    if (static_cast<int>(v.size()) != dim && !(dim == 1 && v.size() == 1))
        throw ConfigError("expected " + std::to_string(dim) + " component(s) for " + where, line, where);
    Point p{v[0], 0.0};
    if (dim == 2) p[1] = v[1];
    return p;
}

inline Mat2 mat_from(const std::vector<double>& v, const std::string& where, int line) {
    Mat2 m{};
    if (v.size() == 1) {
        m[0][0] = v[0];
        m[1][1] = v[0];
    } else if (v.size() == 4) {
        m[0][0] = v[0];
        m[0][1] = v[1];
        m[1][0] = v[2];
        m[1][1] = v[3];
    } else {
        throw ConfigError("expected 1 (scalar) or 4 (row-major 2x2) numbers for " + where, line, where);
    }
    return m;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    using namespace detail;
    const IniFile ini = parse_ini(text);
    Scenario sc;
    sc.raw_text = text;

    auto entry_line = [&](const std::string& sec, const std::string& key) {
        const IniEntry* e = ini.find(sec, key);
        return e ? e->line : 0;
    };
    auto getd = [&](const std::string& sec, const std::string& key, double def) {
        const IniEntry* e = ini.find(sec, key);
        return e ? to_double(e->value, sec + "." + key, e->line) : def;
    };
    auto geti = [&](const std::string& sec, const std::string& key, long def) {
        const IniEntry* e = ini.find(sec, key);
        return e ? to_long(e->value, sec + "." + key, e->line) : def;
    };
    auto gets = [&](const std::string& sec, const std::string& key, const std::string& def) {
        return ini.get_or(sec, key, def);
    };
    auto getv = [&](const std::string& sec, const std::string& key) -> std::optional<std::vector<double>> {
        const IniEntry* e = ini.find(sec, key);
        if (!e || e->value.empty()) return std::nullopt;
        return to_doubles(e->value, sec + "." + key, e->line);
    };

    // [grid]
    if (!ini.has("grid")) throw ConfigError("missing [grid] section");
    const int dim = static_cast<int>(geti("grid", "dim", 1));
    const auto lower = to_doubles(ini.require("grid", "lower"), "grid.lower", entry_line("grid", "lower"));
    const auto upper = to_doubles(ini.require("grid", "upper"), "grid.upper", entry_line("grid", "upper"));
    const auto cells = to_doubles(ini.require("grid", "cells"), "grid.cells", entry_line("grid", "cells"));
    auto at = [&](const std::vector<double>& v, int a) { return v[std::min<size_t>(a, v.size() - 1)]; };
    try {
        if (dim == 1)
            sc.grid = GridSpec::make_1d(at(lower, 0), at(upper, 0), static_cast<int>(at(cells, 0)));
        else
            sc.grid = GridSpec::make_2d(at(lower, 0), at(upper, 0), static_cast<int>(at(cells, 0)), at(lower, 1),
                                        at(upper, 1), static_cast<int>(at(cells, 1)));
    } catch (const Error& e) {
        throw ConfigError(std::string("[grid] ") + e.what(), ini.section_lines.count("grid") ? ini.section_lines.at("grid") : 0, "grid");
    }

    // [weight]
    try {
        sc.weight = WeightFunction(getd("weight", "m", 1.0), getd("weight", "gamma", 0.5));
    } catch (const Error& e) {
        throw ConfigError(std::string("[weight] ") + e.what(), 0, "weight");
    }

    // [diffusion]
    if (auto av = getv("diffusion", "a")) {
        if (av->size() == 1)
            sc.diffusion = DiffusionSpec((*av)[0]);
        else
            sc.diffusion = DiffusionSpec((*av)[0], (*av)[1]);
    }

    // [drift]
    const std::string variant = gets("drift", "variant", "mean_field_linear");
    const double eps = getd("drift", "epsilon", 0.0);
    if (variant == "mean_field_linear") {
        if (dim != 1) throw ConfigError("mean_field_linear drift requires dim = 1", 0, "drift.variant");
        sc.drift = MeanFieldLinear{eps, getd("drift", "delta_shift", 0.0)};
    } else if (variant == "rvh") {
        if (dim != 2) throw ConfigError("rvh drift requires dim = 2", 0, "drift.variant");
        RvhModel m;
        if (auto v = getv("drift", "r")) m.r = mat_from(*v, "drift.r", entry_line("drift", "r"));
        if (auto v = getv("drift", "v")) m.v = point_from(*v, 2, "drift.v", entry_line("drift", "v"));
        if (auto v = getv("drift", "h")) m.h = point_from(*v, 2, "drift.h", entry_line("drift", "h"));
        m.lambda = getd("drift", "lambda", m.r[0][0]);
        m.q = getd("drift", "q", m.lambda);
        m.epsilon = eps;
        m.eta_amplitude = getd("drift", "eta_amplitude", 0.0);
        try {
            m.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("[drift] ") + e.what(), 0, "drift");
        }
        sc.drift = m;
    } else if (variant == "gradient_confining") {
        GradientConfining g;
        g.c1 = getd("drift", "c1", 1.0);
        g.c3 = getd("drift", "c3", 0.0);
        g.dim = dim;
        sc.drift = g;
    } else if (variant == "convolution_kernel") {
        ConvolutionKernelModel m;
        m.dim = dim;
        m.epsilon = eps;
        const std::string b0 = gets("drift", "b0", "zero");
        if (b0 == "zero") {
            m.b0 = BaseDrift::zero();
        } else if (b0 == "linear") {
            Mat2 mm{};
            mm[0][0] = mm[1][1] = -1.0;
            if (auto v = getv("drift", "b0_matrix")) mm = mat_from(*v, "drift.b0_matrix", 0);
            Point c{0.0, 0.0};
            if (auto v = getv("drift", "b0_shift")) c = point_from(*v, dim, "drift.b0_shift", 0);
            m.b0 = BaseDrift::linear(mm, c);
        } else if (b0 == "cubic") {
            m.b0 = BaseDrift::cubic_confining(getd("drift", "b0_c1", 1.0), getd("drift", "b0_c3", 1.0));
        } else {
            throw ConfigError("unknown b0 '" + b0 + "' (catalogue: zero, linear, cubic)", 0, "drift.b0");
        }
        const std::string kern = gets("drift", "kernel", "zero");
        if (kern == "zero") {
            m.kernel = Kernel::zero();
        } else if (kern == "tanh_difference") {
            m.kernel = Kernel::tanh_difference(getd("drift", "kernel_amplitude", 1.0));
        } else if (kern == "sine_eta") {
            m.kernel = Kernel::sine_eta(getd("drift", "kernel_amplitude", 1.0));
        } else if (kern == "linear") {
            Mat2 ax{}, ay{};
            if (auto v = getv("drift", "kernel_ax")) ax = mat_from(*v, "drift.kernel_ax", 0);
            if (auto v = getv("drift", "kernel_ay")) ay = mat_from(*v, "drift.kernel_ay", 0);
            Point c{0.0, 0.0};
            if (auto v = getv("drift", "kernel_c")) c = point_from(*v, dim, "drift.kernel_c", 0);
            m.kernel = Kernel::linear(ax, ay, c);
        } else {
            throw ConfigError("unknown kernel '" + kern +
                                  "' (catalogue: zero, linear, tanh_difference, sine_eta)",
                              0, "drift.kernel");
        }
        sc.drift = m;
    } else {
        throw ConfigError("unknown drift variant '" + variant + "'", 0, "drift.variant");
    }

    // [initial]
    const std::string ikind = gets("initial", "kind", "gaussian");
    if (ikind == "gaussian") {
        sc.initial.kind = InitialCondition::Kind::Gaussian;
        if (auto v = getv("initial", "mean")) sc.initial.mean = point_from(*v, dim, "initial.mean", 0);
        if (auto v = getv("initial", "variance"))
            sc.initial.variance = point_from(*v, dim, "initial.variance", 0);
        if (dim == 1) sc.initial.variance[1] = 1.0;
    } else if (ikind == "uniform") {
        sc.initial.kind = InitialCondition::Kind::Uniform;
        if (auto v = getv("initial", "lo")) sc.initial.lo = point_from(*v, dim, "initial.lo", 0);
        if (auto v = getv("initial", "hi")) sc.initial.hi = point_from(*v, dim, "initial.hi", 0);
    } else if (ikind == "point") {
        sc.initial.kind = InitialCondition::Kind::PointMass;
        if (auto v = getv("initial", "mean")) sc.initial.mean = point_from(*v, dim, "initial.mean", 0);
    } else if (ikind == "mixture") {
        sc.initial.kind = InitialCondition::Kind::Mixture;
        const IniEntry* we = ini.find("initial", "weights");
        const IniEntry* me = ini.find("initial", "means");
        const IniEntry* ve = ini.find("initial", "variances");
        if (!we || !me || !ve)
            throw ConfigError("mixture initial condition requires weights, means, variances", 0, "initial");
        sc.initial.weights = to_doubles(we->value, "initial.weights", we->line);
        for (const auto& tok : split(me->value, ';'))
            sc.initial.comp_means.push_back(point_from(to_doubles(tok, "initial.means", me->line), dim,
                                                       "initial.means", me->line));
        for (const auto& tok : split(ve->value, ';'))
            sc.initial.comp_vars.push_back(point_from(to_doubles(tok, "initial.variances", ve->line), dim,
                                                      "initial.variances", ve->line));
        if (sc.initial.weights.size() != sc.initial.comp_means.size() ||
            sc.initial.weights.size() != sc.initial.comp_vars.size())
            throw ConfigError("mixture: weights, means, variances must have equal length", we->line, "initial");
        if (dim == 1)
            for (auto& v : sc.initial.comp_vars) v[1] = 1.0;
    } else {
        throw ConfigError("unknown initial kind '" + ikind + "'", 0, "initial.kind");
    }

    // [solve]
    sc.solve.dt = getd("solve", "dt", 0.0);
    sc.solve.horizon = getd("solve", "horizon", 1.0);
    sc.solve.snapshot_stride = getd("solve", "snapshot_stride", 0.1);
    sc.solve.stationary_tol = getd("solve", "stationary_tol", 1e-8);
    sc.solve.drift_refresh_lag = static_cast<int>(geti("solve", "drift_refresh_lag", 1));
    sc.solve.max_iterations = geti("solve", "max_iterations", 4000000);
    const std::string scheme = gets("solve", "scheme", "chang_cooper");
    if (scheme == "chang_cooper")
        sc.solve.scheme = Scheme::ChangCooper;
    else if (scheme == "exponential_upwind")
        sc.solve.scheme = Scheme::ExponentialUpwind;
    else
        throw ConfigError("unknown scheme '" + scheme + "'", 0, "solve.scheme");
    const std::string stepping = gets("solve", "stepping", "semi_implicit");
    if (stepping == "semi_implicit")
        sc.solve.stepping = TimeStepping::SemiImplicit;
    else if (stepping == "explicit")
        sc.solve.stepping = TimeStepping::Explicit;
    else
        throw ConfigError("unknown stepping '" + stepping + "'", 0, "solve.stepping");
    const std::string smode = gets("solve", "stationary_mode", "direct");
    if (smode == "direct")
        sc.solve.stationary_mode = StationaryMode::DirectNullSpace;
    else if (smode == "long_time")
        sc.solve.stationary_mode = StationaryMode::LongTime;
    else
        throw ConfigError("unknown stationary_mode '" + smode + "'", 0, "solve.stationary_mode");

    // [run]
    if (!ini.has("run")) throw ConfigError("missing [run] section");
    const IniEntry* an = ini.find("run", "analyses");
    if (an && !an->value.empty())
        for (const auto& tok : split(an->value, ',')) sc.analyses.push_back(analysis_from_string(tok, an->line));
    sc.output_dir = gets("run", "output", "out");
    sc.seed = static_cast<uint64_t>(geti("run", "seed", 1));
    sc.emit_snapshots = gets("run", "emit_snapshots", "false") == "true";

    // analysis parameter sections
    sc.decay.reference = gets("decay-fit", "reference", "gaussian");
    if (auto v = getv("decay-fit", "ref_mean")) sc.decay.ref_mean = point_from(*v, dim, "decay-fit.ref_mean", 0);
    if (auto v = getv("decay-fit", "ref_variance"))
        sc.decay.ref_variance = point_from(*v, dim, "decay-fit.ref_variance", 0);
    if (dim == 1) sc.decay.ref_variance[1] = 1.0;
    {
        const IniEntry* lo = ini.find("decay-fit", "window_lo");
        const IniEntry* hi = ini.find("decay-fit", "window_hi");
        if (lo && hi)
            sc.decay.window = std::make_pair(to_double(lo->value, "decay-fit.window_lo", lo->line),
                                             to_double(hi->value, "decay-fit.window_hi", hi->line));
    }

    sc.w1.reference = gets("w1-check", "reference", "gaussian");
    if (auto v = getv("w1-check", "ref_mean")) sc.w1.ref_mean = point_from(*v, dim, "w1-check.ref_mean", 0);
    if (auto v = getv("w1-check", "ref_variance"))
        sc.w1.ref_variance = point_from(*v, dim, "w1-check.ref_variance", 0);
    if (dim == 1) sc.w1.ref_variance[1] = 1.0;
    if (const IniEntry* e = ini.find("w1-check", "kappa"))
        if (e->value != "auto") sc.w1.kappa = to_double(e->value, "w1-check.kappa", e->line);
    if (const IniEntry* e = ini.find("w1-check", "c_lip"))
        if (e->value != "auto") sc.w1.c_lip = to_double(e->value, "w1-check.c_lip", e->line);

    sc.conditions.constants = gets("conditions", "constants", "closed-form");
    sc.conditions.q = getd("conditions", "q", 0.0);
    sc.conditions.measures = static_cast<int>(geti("conditions", "measures", 10));
    sc.conditions.points = static_cast<int>(geti("conditions", "points", 10000));
    sc.conditions.seed = static_cast<uint64_t>(geti("conditions", "seed", 23));
    if (sc.conditions.constants == "explicit") {
        HConstants hc;
        hc.C = getd("conditions", "C", 0.0);
        hc.Lambda = getd("conditions", "Lambda", 1.0);
        hc.delta = getd("conditions", "delta", 0.0);
        hc.N1 = getd("conditions", "N1", 0.0);
        hc.N2 = getd("conditions", "N2", 0.0);
        sc.conditions.explicit_constants = hc;
    } else if (sc.conditions.constants != "closed-form" && sc.conditions.constants != "auto") {
        throw ConfigError("conditions.constants must be closed-form, auto or explicit", 0,
                          "conditions.constants");
    }

    sc.stationary.tol = getd("stationary", "tol", 1e-9);
    sc.stationary.max_iterations = static_cast<int>(geti("stationary", "max_iterations", 60));
    sc.stationary.damping = getd("stationary", "damping", 1.0);
    if (const IniEntry* e = ini.find("stationary", "constraint_q"))
        if (!e->value.empty()) sc.stationary.constraint_q = to_double(e->value, "stationary.constraint_q", e->line);
    if (auto v = getv("stationary", "guess_mean"))
        sc.stationary.guess_mean = point_from(*v, dim, "stationary.guess_mean", 0);
    if (auto v = getv("stationary", "guess_variance"))
        sc.stationary.guess_variance = point_from(*v, dim, "stationary.guess_variance", 0);
    if (dim == 1) sc.stationary.guess_variance[1] = 1.0;

    if (auto v = getv("branch-sweep", "q_values")) sc.branch.q_values = *v;

    sc.particles.n = static_cast<int>(geti("particles", "n", 10000));
    sc.particles.dt = getd("particles", "dt", 0.01);
    sc.particles.smooth = gets("particles", "smooth", "true") == "true";
    if (auto v = getv("particles", "seeds")) {
        sc.particles.seeds.clear();
        for (double d : *v) sc.particles.seeds.push_back(static_cast<uint64_t>(d));
    }

    sc.invariants.witness_tol = getd("invariants", "witness_tol", 1e-3);
    sc.invariants.track_mean = gets("invariants", "track", "mean") == "mean";
    if (const IniEntry* e = ini.find("invariants", "basis")) {
        std::istringstream bs(e->value);
        std::string entry;
        while (bs >> entry) {
            const auto colon = entry.find(':');
            const std::string nm = entry.substr(0, colon);
            Point arg{0.0, 0.0};
            if (colon != std::string::npos) {
                const auto parts = to_doubles(entry.substr(colon + 1), "invariants.basis", e->line);
                arg[0] = parts.empty() ? 0.0 : parts[0];
                if (parts.size() > 1) arg[1] = parts[1];
            }
            if (nm != "monomial" && nm != "linear-form" && nm != "exponential")
                throw ConfigError("unknown basis function '" + nm +
                                      "' (catalogue: monomial, linear-form, exponential)",
                                  e->line, "invariants.basis");
            sc.invariants.basis.emplace_back(nm, arg);
        }
    }

    ini.check_all_used();

    // cross-analysis requirements
    auto needs = [&](AnalysisKind k, AnalysisKind dep) {
        if (sc.has(k) && !sc.has(dep))
            throw ConfigError(std::string(to_string(k)) + " requires the " + to_string(dep) + " analysis", 0,
                              "run.analyses");
    };
    needs(AnalysisKind::DecayFit, AnalysisKind::Evolve);
    needs(AnalysisKind::W1Check, AnalysisKind::Evolve);
    needs(AnalysisKind::CrossValidate, AnalysisKind::Evolve);
    needs(AnalysisKind::CrossValidate, AnalysisKind::Particles);
    if (sc.has(AnalysisKind::DecayFit) && sc.decay.reference == "stationary")
        needs(AnalysisKind::DecayFit, AnalysisKind::Stationary);
    if (sc.has(AnalysisKind::W1Check) && sc.w1.reference == "stationary")
        needs(AnalysisKind::W1Check, AnalysisKind::Stationary);
    if (sc.has(AnalysisKind::BranchSweep)) {
        if (!std::holds_alternative<RvhModel>(sc.drift))
            throw ConfigError("branch-sweep requires the rvh drift variant", 0, "run.analyses");
        if (sc.branch.q_values.empty())
            throw ConfigError("branch-sweep requires [branch-sweep] q_values", 0, "branch-sweep.q_values");
    }
    if (sc.has(AnalysisKind::Particles) && sc.particles.n < 100)
        throw ConfigError("particles.n must be at least 100", 0, "particles.n");
    if (sc.has(AnalysisKind::W1Check) && dim != 1)
        throw ConfigError("w1-check supports 1D scenarios only", 0, "run.analyses");

    return sc;
}

}  // namespace fpklab
