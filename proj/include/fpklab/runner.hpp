#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpklab/convergence.hpp"
#include "fpklab/csv_io.hpp"
#include "fpklab/hconditions.hpp"
#include "fpklab/invariants.hpp"
#include "fpklab/nonlinear.hpp"
#include "fpklab/particles.hpp"
#include "fpklab/scenario.hpp"
#include "fpklab/stationary.hpp"

namespace fpklab {

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 config error, 2 analysis-level failure
    std::string output_dir;
    std::vector<std::string> files;
    std::vector<std::string> messages;
};

namespace detail {

/// Collects emitted artifacts and writes the manifest at the end. Reruns
/// with the same config and seed are byte-identical (no timestamps).
struct Emitter {
    std::string dir;
    std::vector<std::pair<std::string, std::string>> files;  // relative path, content

    void emit(const std::string& rel, const std::string& content) {
        write_text_file((std::filesystem::path(dir) / rel).string(), content);
        files.emplace_back(rel, content);
    }

    nlohmann::json manifest(const Scenario& sc, const nlohmann::json& results, int exit_code) const {
        nlohmann::json m;
        m["config"] = sc.raw_text;
        m["exit_code"] = exit_code;
        m["results"] = results;
        nlohmann::json flist = nlohmann::json::array();
        for (const auto& [rel, content] : files) {
            nlohmann::json f;
            f["path"] = rel;
            f["bytes"] = content.size();
            char crc[16];
            std::snprintf(crc, sizeof(crc), "%08x", crc32(content));
            f["crc32"] = crc;
            flist.push_back(f);
        }
        m["files"] = flist;
        return m;
    }
};

inline std::string zero_pad(int v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s = "0" + s;
    return s;
}

inline nlohmann::json fit_json(const DecayFit& fit) {
    nlohmann::json j;
    j["alpha1"] = fit.alpha1;
    j["alpha2"] = fit.alpha2;
    j["r2"] = fit.r2;
    j["window"] = {fit.t_lo, fit.t_hi};
    return j;
}

inline nlohmann::json stationary_json(const StationaryResult& r) {
    nlohmann::json j;
    j["residual"] = r.residual;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["v_moment"] = r.v_moment;
    j["residual_history"] = r.residual_history;
    j["constraint_history"] = r.constraint_history;
    for (const auto& [k, v] : r.constraint_values) j["moments"][k] = v;
    return j;
}

}  // namespace detail

/// Execute a parsed scenario: run the requested analyses in dependency
/// order, write every artifact under the output directory and finish with a
/// manifest listing each produced file with its checksum.
inline RunResult run_scenario(const Scenario& sc, const std::string& base_dir = ".") {
    RunResult res;
    detail::Emitter em;
    em.dir = (std::filesystem::path(base_dir) / sc.output_dir).string();
    std::filesystem::create_directories(em.dir);
    res.output_dir = em.dir;

    nlohmann::json results;
    int exit_code = 0;

    const DensityField nu = sc.initial.to_density(sc.grid);
    std::optional<StationaryResult> stationary;
    std::optional<Trajectory> trajectory;
    std::optional<std::vector<ParticleSnapshots>> particle_runs;

    auto fail = [&](const std::string& analysis, const std::string& what) {
        results[analysis]["status"] = "failed";
        results[analysis]["error"] = what;
        res.messages.push_back(analysis + ": " + what);
        exit_code = 2;
    };

    // fixed dependency order: structural checks, stationary objects, then
    // time-dependent runs and the post-processing that consumes them
    const AnalysisKind order[] = {AnalysisKind::Conditions, AnalysisKind::Stationary,
                                  AnalysisKind::BranchSweep, AnalysisKind::Evolve,
                                  AnalysisKind::Invariants,  AnalysisKind::DecayFit,
                                  AnalysisKind::W1Check,     AnalysisKind::Particles,
                                  AnalysisKind::CrossValidate};

    for (AnalysisKind kind : order) {
        if (!sc.has(kind)) continue;
        const std::string name = to_string(kind);
        try {
            switch (kind) {
                case AnalysisKind::Invariants: {
                    const KernelFn kf = membership_kernel(sc.drift);
                    nlohmann::json reports = nlohmann::json::array();
                    std::vector<ClassifiedFunction> basis;
                    std::vector<ScalarFunction> psis;
                    const ScalarFunction tracked =
                        sc.grid.dim == 1 ? psi_monomial(1)
                                         : psi_linear_form(std::get_if<RvhModel>(&sc.drift)
                                                               ? std::get<RvhModel>(sc.drift).v
                                                               : Point{1.0, 1.0});
                    if (sc.invariants.basis.empty()) {
                        psis.push_back(tracked);
                        psis.push_back(sc.grid.dim == 1 ? psi_monomial(2)
                                                        : psi_linear_form(Point{1.0, -1.0}));
                    } else {
                        for (const auto& [nm, arg] : sc.invariants.basis) psis.push_back(psi_by_name(nm, arg));
                    }
                    for (const auto& psi : psis) {
                        const InvariantReport rep = check_membership(psi, kf, sc.grid.dim, sc.grid,
                                                                     sc.diffusion, std::nullopt, 200,
                                                                     sc.seed, sc.weight);
                        nlohmann::json j;
                        j["psi"] = rep.psi_name;
                        j["class"] = to_string(rep.cls);
                        j["lambda"] = rep.lambda;
                        j["max_residual"] = rep.max_residual;
                        j["growth_bounded"] = rep.growth_bounded;
                        reports.push_back(j);
                        basis.push_back({psi, rep.cls, rep.lambda});
                    }
                    results[name]["membership"] = reports;
                    if (trajectory && sc.invariants.track_mean) {
                        const FunctionalTrack tr = track_functional(*trajectory, tracked);
                        em.emit("tracked_functional.csv", series_csv("t", tracked.name, tr.times, tr.values));
                        results[name]["track"]["law"] = tr.law;
                        results[name]["track"]["lambda"] = tr.lambda;
                        results[name]["track"]["rel_deviation"] = tr.rel_deviation;
                    }
                    if (stationary) {
                        const auto witness =
                            nonconvergence_witness(nu, stationary->density, basis, sc.invariants.witness_tol);
                        results[name]["witness"] = witness ? witness->psi.name : "none";
                    }
                    results[name]["status"] = "ok";
                    em.emit("invariants.json", results[name].dump(2) + "\n");
                    break;
                }
                case AnalysisKind::Conditions: {
                    std::optional<MomentConstraint> con;
                    if (std::holds_alternative<MeanFieldLinear>(sc.drift))
                        con = MomentConstraint{Point{1.0, 0.0}, sc.conditions.q};
                    else if (const auto* rvh = std::get_if<RvhModel>(&sc.drift))
                        con = MomentConstraint{rvh->v, sc.conditions.q};
                    const auto measures =
                        sample_test_measures(sc.grid, sc.conditions.measures, sc.conditions.seed, con);
                    std::optional<HConstants> constants;
                    bool auto_fit = false;
                    if (sc.conditions.constants == "closed-form") {
                        constants = catalogued_h_constants(sc.drift, sc.conditions.q);
                        if (!constants)
                            throw ConstantsMissingError(
                                "no closed-form constants catalogued for this drift variant");
                    } else if (sc.conditions.constants == "explicit") {
                        constants = sc.conditions.explicit_constants;
                    } else {
                        auto_fit = true;
                    }
                    const HConditionsReport rep =
                        check_h_conditions(sc.drift, sc.diffusion, sc.weight, measures, sc.conditions.points,
                                           constants, auto_fit, sc.conditions.seed);
                    nlohmann::json j;
                    j["C"] = rep.constants.C;
                    j["Lambda"] = rep.constants.Lambda;
                    j["delta"] = rep.constants.delta;
                    j["N1"] = rep.constants.N1;
                    j["N2"] = rep.constants.N2;
                    j["fitted"] = rep.fitted;
                    j["margin_drift"] = rep.margin_drift;
                    j["margin_growth"] = rep.margin_growth;
                    j["margin_lipschitz"] = rep.margin_lipschitz;
                    j["violated"] = rep.violated();
                    j["C1"] = rep.c1;
                    j["C2"] = rep.c2;
                    j["theta"] = rep.theta;
                    j["sample_points"] = rep.sample_points;
                    j["measures"] = rep.measure_count;
                    results[name] = j;
                    results[name]["status"] = rep.violated() ? "violated" : "ok";
                    em.emit("conditions.json", results[name].dump(2) + "\n");
                    if (rep.violated()) {
                        res.messages.push_back("conditions: violation margins detected");
                        exit_code = std::max(exit_code, 2);
                    }
                    break;
                }
                case AnalysisKind::Stationary: {
                    StationaryOptions opts;
                    opts.tol = sc.stationary.tol;
                    opts.max_iterations = sc.stationary.max_iterations;
                    opts.damping = sc.stationary.damping;
                    if (sc.stationary.constraint_q) {
                        const ScalarFunction h = sc.grid.dim == 1
                                                     ? psi_monomial(1)
                                                     : psi_linear_form(std::get<RvhModel>(sc.drift).v);
                        opts.constraint = Constraint{h, *sc.stationary.constraint_q};
                    }
                    const Point gm = sc.stationary.guess_mean.value_or(Point{0.0, 0.0});
                    const DensityField guess = make_gaussian(sc.grid, gm, sc.stationary.guess_variance);
                    const StationaryResult r =
                        find_stationary(sc.drift, sc.diffusion, sc.weight, sc.solve, opts, guess);
                    stationary = r;
                    em.emit("stationary.csv", density_csv(r.density));
                    em.emit("stationary.json", detail::stationary_json(r).dump(2) + "\n");
                    results[name]["converged"] = r.converged;
                    results[name]["residual"] = r.residual;
                    results[name]["iterations"] = r.iterations;
                    results[name]["status"] = r.converged ? "ok" : "no-convergence";
                    if (!r.converged) {
                        res.messages.push_back("stationary: no convergence after " +
                                               std::to_string(r.iterations) + " iterations");
                        exit_code = std::max(exit_code, 2);
                    }
                    break;
                }
                case AnalysisKind::BranchSweep: {
                    const auto& rvh = std::get<RvhModel>(sc.drift);
                    StationaryOptions opts;
                    opts.tol = sc.stationary.tol;
                    opts.max_iterations = sc.stationary.max_iterations;
                    opts.damping = sc.stationary.damping;
                    const auto sweep =
                        branch_sweep(rvh, sc.diffusion, sc.weight, sc.solve, sc.grid, sc.branch.q_values, opts);
                    nlohmann::json arr = nlohmann::json::array();
                    for (size_t i = 0; i < sweep.size(); ++i) {
                        const std::string tag = "q" + detail::zero_pad(static_cast<int>(i), 2);
                        em.emit("branch_" + tag + ".csv", density_csv(sweep[i].density));
                        nlohmann::json j = detail::stationary_json(sweep[i]);
                        j["q_target"] = sc.branch.q_values[i];
                        em.emit("branch_" + tag + ".json", j.dump(2) + "\n");
                        arr.push_back(j);
                        if (!sweep[i].converged) {
                            res.messages.push_back("branch-sweep: q=" + std::to_string(sc.branch.q_values[i]) +
                                                   " did not converge");
                            exit_code = std::max(exit_code, 2);
                        }
                    }
                    results[name]["branches"] = arr;
                    results[name]["status"] = "ok";
                    break;
                }
                case AnalysisKind::Evolve: {
                    const Trajectory traj = evolve_nonlinear(nu, sc.drift, sc.diffusion, sc.weight, sc.solve);
                    trajectory = traj;
                    for (const auto& [cname, series] : traj.channels)
                        em.emit(cname + ".csv", series_csv("t", cname, traj.step_times, series));
                    if (sc.emit_snapshots)
                        for (size_t i = 0; i < traj.snapshots.size(); ++i)
                            em.emit("density_" + detail::zero_pad(static_cast<int>(i), 5) + ".csv",
                                    density_csv(traj.snapshots[i]));
                    results[name]["status"] = "ok";
                    results[name]["steps"] = traj.step_times.size() - 1;
                    results[name]["dt"] = traj.dt;
                    results[name]["warnings"] = traj.warnings;
                    break;
                }
                case AnalysisKind::DecayFit: {
                    const DensityField ref =
                        sc.decay.reference == "stationary"
                            ? stationary->density
                            : make_gaussian(sc.grid, sc.decay.ref_mean, sc.decay.ref_variance);
                    const auto [ts, ds] = distance_series(*trajectory, ref, sc.weight);
                    em.emit("tv_decay.csv", series_csv("t", "weighted_tv", ts, ds));
                    const DecayFit fit = decay_rate_fit(ts, ds, sc.decay.window);
                    em.emit("decay_fit.json", detail::fit_json(fit).dump(2) + "\n");
                    results[name] = detail::fit_json(fit);
                    results[name]["status"] = "ok";
                    break;
                }
                case AnalysisKind::W1Check: {
                    const DensityField ref =
                        sc.w1.reference == "stationary"
                            ? stationary->density
                            : make_gaussian(sc.grid, sc.w1.ref_mean, sc.w1.ref_variance);
                    double kappa, clip;
                    if (sc.w1.kappa && sc.w1.c_lip) {
                        kappa = *sc.w1.kappa;
                        clip = *sc.w1.c_lip;
                    } else {
                        std::tie(kappa, clip) = kantorovich_constants(sc.drift);
                        if (sc.w1.kappa) kappa = *sc.w1.kappa;
                        if (sc.w1.c_lip) clip = *sc.w1.c_lip;
                    }
                    const auto margins = w1_contraction_check(*trajectory, ref, kappa, clip);
                    std::vector<double> ts, ms;
                    for (const auto& [t, m] : margins) {
                        ts.push_back(t);
                        ms.push_back(m);
                    }
                    em.emit("w1_margins.csv", series_csv("t", "margin", ts, ms));
                    double worst = ms.empty() ? 0.0 : *std::min_element(ms.begin(), ms.end());
                    results[name]["kappa"] = kappa;
                    results[name]["c_lip"] = clip;
                    results[name]["worst_margin"] = worst;
                    results[name]["status"] = "ok";
                    break;
                }
                case AnalysisKind::Particles: {
                    particle_runs.emplace();
                    const Sampler sampler = sc.initial.to_sampler(sc.grid.dim);
                    nlohmann::json arr = nlohmann::json::array();
                    for (size_t s = 0; s < sc.particles.seeds.size(); ++s) {
                        const uint64_t seed = sc.particles.seeds[s];
                        const ParticleSnapshots snaps =
                            simulate(sampler, sc.drift, sc.diffusion, sc.particles.n, sc.particles.dt,
                                     sc.solve.horizon, seed, sc.solve.snapshot_stride);
                        particle_runs->push_back(snaps);
                        const std::string tag = "seed" + detail::zero_pad(static_cast<int>(s), 2);
                        em.emit("ensemble_" + tag + "_final.csv", ensemble_csv(snaps.frames.back(), snaps.dim));
                        // per-seed moment series
                        std::vector<double> means;
                        for (const auto& frame : snaps.frames) {
                            long double acc = 0.0L;
                            for (int i = 0; i < snaps.n; ++i) acc += frame[static_cast<size_t>(i) * snaps.dim];
                            means.push_back(static_cast<double>(acc) / snaps.n);
                        }
                        em.emit("ensemble_" + tag + "_mean.csv", series_csv("t", "mean0", snaps.times, means));
                        nlohmann::json j;
                        j["seed"] = seed;
                        j["n"] = snaps.n;
                        j["terminal_mean0"] = means.back();
                        arr.push_back(j);
                    }
                    results[name]["runs"] = arr;
                    results[name]["status"] = "ok";
                    break;
                }
                case AnalysisKind::CrossValidate: {
                    nlohmann::json arr = nlohmann::json::array();
                    int flagged = 0;
                    double max_z = 0.0;
                    for (size_t s = 0; s < particle_runs->size(); ++s) {
                        const CrossValidationReport rep = cross_validate((*particle_runs)[s], *trajectory, sc.drift);
                        nlohmann::json j;
                        j["seed"] = sc.particles.seeds[s];
                        j["max_z"] = rep.max_z;
                        j["flagged"] = rep.flagged;
                        arr.push_back(j);
                        flagged += rep.flagged;
                        max_z = std::max(max_z, rep.max_z);
                    }
                    results[name]["per_seed"] = arr;
                    results[name]["max_z"] = max_z;
                    results[name]["flagged"] = flagged;
                    results[name]["status"] = flagged == 0 ? "ok" : "flagged";
                    em.emit("cross_validate.json", results[name].dump(2) + "\n");
                    if (flagged > 0) {
                        res.messages.push_back("cross-validate: " + std::to_string(flagged) + " flags");
                        exit_code = std::max(exit_code, 2);
                    }
                    break;
                }
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            fail(name, e.what());
        }
    }

    const nlohmann::json manifest = em.manifest(sc, results, exit_code);
    write_text_file((std::filesystem::path(em.dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    for (const auto& [rel, content] : em.files) res.files.push_back(rel);
    res.files.push_back("manifest.json");
    res.exit_code = exit_code;
    return res;
}

/// Parse-and-run entry point used by the command line tool.
inline RunResult run_scenario_text(const std::string& config_text, const std::string& base_dir = ".") {
    const Scenario sc = parse_scenario(config_text);
    return run_scenario(sc, base_dir);
}

/// Bundled example scenarios, keyed by name.
inline const std::map<std::string, std::string>& bundled_scenarios();

}  // namespace fpklab

#include "fpklab/bundled_scenarios.hpp"
