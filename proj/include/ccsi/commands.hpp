#pragma once

// The pipeline steps behind each command-line subcommand. Each writes its
// files under the configured output directory and refuses to replace
// existing files unless asked to.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "ccsi/analysis.hpp"
#include "ccsi/config.hpp"
#include "ccsi/validation.hpp"

namespace ccsi {

namespace fs = std::filesystem;

/// Creates `dir` and fails if any of `names` already exists there, unless
/// `overwrite` is set.
inline void prepare_output(const fs::path& dir, const std::vector<std::string>& names, bool overwrite)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    if (overwrite) return;
    std::vector<std::string> existing;
    for (const auto& n : names)
        if (fs::exists(dir / n)) existing.push_back((dir / n).string());
    if (existing.empty()) return;
    std::string msg = "refusing to overwrite existing files (pass --overwrite):";
    for (const auto& e : existing) msg += "\n  " + e;
    throw IoError(msg);
}

inline std::vector<std::string> map_files(const std::string& stem)
{
    std::vector<std::string> out;
    for (const char* part : {"_delta_eps", "_delta_sigma"})
        for (const char* ext : {".csv", ".pgm", ".pgm.txt"}) out.push_back(stem + part + ext);
    return out;
}

/// Each command keeps its own copy so later steps in the same directory do
/// not collide with earlier ones.
inline void write_config_copy(const RunConfig& rc, const fs::path& dir, const std::string& name)
{
    auto os = csv::open_for_write(dir / name);
    os << to_json(rc).dump(2) << '\n';
    if (!os) throw IoError("failed writing " + (dir / name).string());
}

/// The configured phantom on the inversion grid.
inline ContrastMap cmd_phantom(const RunConfig& rc, bool overwrite)
{
    rc.validate();
    const fs::path dir = rc.output_dir;
    auto names = map_files("phantom");
    names.emplace_back("config_phantom.json");
    prepare_output(dir, names, overwrite);
    const Subdomain domain = inversion_domain(rc);
    const ContrastMap ph = build_phantom(rc, domain);
    export_map(domain, ph, dir / "phantom");
    write_config_copy(rc, dir, "config_phantom.json");
    return ph;
}

/// Incident fields on the inversion domain: the analytic line-source field,
/// scaled per (p, i) to the measured incident field when a receiver
/// opposite the source exists.
inline SourceFreqTable<CVector> inversion_incident_fields(const MeasurementSet& ms, const Subdomain& domain)
{
    const auto& cfg = ms.config;
    SourceFreqTable<Complex> factors;
    bool calibrated = false;
    if (!ms.incident.empty()) {
        try {
            factors = calibrate_incident(cfg, ms.incident);
            calibrated = true;
        } catch (const ConfigError&) {
        }
    }
    if (!calibrated) factors = make_table<Complex>(cfg.sources(), cfg.frequencies(), Complex(1.0, 0.0));
    return calibrated_incident_fields(cfg, domain, factors);
}

inline InversionProblem problem_from_measurements(const RunConfig& rc, const MeasurementSet& ms)
{
    const Subdomain domain = inversion_domain(rc);
    return make_problem(ms.config, domain, ms.scattered, inversion_incident_fields(ms, domain), {}, rc.threads);
}

/// Synthesizes data on the fine grid, adds noise, and stores the true
/// solution on the inversion grid for later landscape runs.
inline MeasurementSet cmd_simulate(const RunConfig& rc, bool overwrite)
{
    rc.validate();
    const fs::path dir = rc.output_dir;
    auto names = map_files("truth");
    for (const char* n : {"measurements.csv", "measurement_config.json", "actual_solution.csv", "config_simulate.json"})
        names.emplace_back(n);
    prepare_output(dir, names, overwrite);

    const Subdomain fine = synthesis_domain(rc);
    SynthesisOptions so;
    so.inversion_cell = rc.inversion_dx_m;
    so.threads = rc.threads;
    MeasurementSet ms = synthesize(rc.measurement, build_phantom(rc, fine), fine, so);
    ms = add_noise(ms, rc.snr_db, rc.seed);
    write_measurements_csv(ms, dir / "measurements.csv");
    {
        auto os = csv::open_for_write(dir / "measurement_config.json");
        os << config_to_json(rc.measurement, rc.snr_db, rc.seed).dump(2) << '\n';
    }
    const Subdomain domain = inversion_domain(rc);
    const ContrastMap truth = build_phantom(rc, domain);
    export_map(domain, truth, dir / "truth");
    const auto prob = make_problem(rc.measurement, domain, ms.scattered, inversion_incident_fields(ms, domain), {}, rc.threads);
    write_solution_csv(actual_solution(prob, truth, {}, rc.threads), dir / "actual_solution.csv");
    write_config_copy(rc, dir, "config_simulate.json");
    return ms;
}

/// Runs the configured variant on a measurement file and writes the
/// reconstruction, its per-iteration log and its final state.
inline RunResult cmd_invert(const RunConfig& rc, const fs::path& data_path, bool overwrite, std::ostream* progress = nullptr)
{
    rc.validate();
    const fs::path dir = rc.output_dir;
    const std::string tag = to_string(rc.variant);
    auto names = map_files("contrast_" + tag);
    for (const auto& n : {"log_" + tag + ".csv", "state_" + tag + ".csv", "warnings_" + tag + ".txt"}) names.push_back(n);
    names.push_back("config_invert_" + tag + ".json");
    prepare_output(dir, names, overwrite);

    const MeasurementSet ms = read_measurements_csv(data_path, rc.measurement);
    const auto prob = problem_from_measurements(rc, ms);
    RunOptions opts;
    opts.variant = rc.variant;
    opts.max_iterations = rc.max_iterations;
    opts.threads = rc.threads;
    const ContrastMap truth = build_phantom(rc, prob.domain);
    if (truth.delta_eps.norm() > 0.0 || truth.delta_sigma.norm() > 0.0) opts.truth = truth;
    if (progress)
        opts.on_iteration = [progress](const IterationRecord& r) {
            if (r.iteration % 64 == 0)
                *progress << "iteration " << r.iteration << "  cost " << r.cost_half << "  err " << r.err << std::endl;
        };
    RunResult res = run(prob, opts);
    export_map(prob.domain, res.master, dir / ("contrast_" + tag));
    export_curves(res.log, dir / ("log_" + tag + ".csv"));
    SolutionPoint state;
    if (res.state.chi.empty()) {
        state.chi.assign(prob.frequencies(), CVector::Zero(static_cast<Eigen::Index>(prob.domain.size())));
        state.e_tot = prob.incident;
    } else {
        state = solution_from_state(res.state);
    }
    write_solution_csv(state, dir / ("state_" + tag + ".csv"));
    {
        auto os = csv::open_for_write(dir / ("warnings_" + tag + ".txt"));
        for (const auto& w : res.warnings) os << w << '\n';
    }
    write_config_copy(rc, dir, "config_invert_" + tag + ".json");
    return res;
}

/// Samples the three-term cost between the given solution states.
inline Landscape cmd_landscape(const RunConfig& rc, const fs::path& data_path, const fs::path& cc_state,
                               const fs::path& mr_state, const fs::path& act_state, int samples, bool overwrite)
{
    rc.validate();
    const fs::path dir = rc.output_dir;
    prepare_output(dir, {"landscape.csv", "config_landscape.json"}, overwrite);
    const MeasurementSet ms = read_measurements_csv(data_path, rc.measurement);
    const auto prob = problem_from_measurements(rc, ms);
    const std::size_t P = prob.sources(), I = prob.frequencies();
    const auto n = static_cast<Eigen::Index>(prob.domain.size());
    const auto x_cc = read_solution_csv(cc_state, P, I, n);
    const auto x_mr = read_solution_csv(mr_state, P, I, n);
    const auto x_act = read_solution_csv(act_state, P, I, n);
    const Landscape l = cost_landscape(prob, x_cc, x_mr, x_act, samples, 1.5, rc.threads);
    write_landscape_csv(l, dir / "landscape.csv");
    write_config_copy(rc, dir, "config_landscape.json");
    return l;
}

/// Runs all self-checks and prints one line per check.
inline bool cmd_validate(int threads, std::ostream& os)
{
    std::vector<CheckResult> checks;
    checks.push_back(check_cylinder_scattering(default_config()));
    const auto prob = small_test_problem(threads);
    const auto adj = check_adjoints(prob, 50, 11);
    checks.push_back(adj.first);
    checks.push_back(adj.second);
    for (Variant v : {Variant::cc, Variant::plain}) {
        InversionState s = initialize(prob, threads);
        iterate(s, prob, v, threads);
        const auto g = check_gradients(prob, s, v, 5);
        checks.push_back(g.first);
        checks.push_back(g.second);
    }
    bool all = true;
    for (const auto& c : checks) {
        os << (c.passed() ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (< " << c.tolerance << ")\n";
        all = all && c.passed();
    }
    return all;
}

} // namespace ccsi
