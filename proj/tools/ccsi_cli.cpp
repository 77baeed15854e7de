// Command-line front end: phantom, simulate, invert, landscape, validate.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "ccsi/commands.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> variant;
    std::optional<int> iterations;
    std::optional<double> snr_db;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    bool overwrite = false;
};

ccsi::RunConfig resolve(const Overrides& o)
{
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream is(o.config);
        if (!is) throw ccsi::IoError("cannot open config " + o.config);
        try {
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::parse_error& e) {
            throw ccsi::ConfigError(o.config + ": " + e.what());
        }
        if (!j.is_object()) throw ccsi::ConfigError(o.config + ": top level must be a JSON object");
    }
    if (o.variant) j["variant"] = *o.variant;
    if (o.iterations) j["max_iterations"] = *o.iterations;
    if (o.snr_db) j["snr_db"] = *o.snr_db;
    if (o.seed) j["seed"] = *o.seed;
    if (o.out) j["output_dir"] = *o.out;
    if (o.threads) j["threads"] = *o.threads;
    return ccsi::run_config_from_json(j);
}

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--variant", o.variant, "cc or plain")->check(CLI::IsMember({"cc", "plain"}));
    cmd->add_option("--iterations", o.iterations, "iteration budget");
    cmd->add_option("--snr-db", o.snr_db, "signal-to-noise ratio of the synthetic data");
    cmd->add_option("--seed", o.seed, "noise seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_flag("--overwrite", o.overwrite, "replace existing output files");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-frequency contrast source inversion for 2-D microwave imaging"};
    app.require_subcommand(1);
    Overrides o;

    auto* phantom = app.add_subcommand("phantom", "write the configured phantom on the inversion grid");
    auto* simulate = app.add_subcommand("simulate", "synthesize measurements for the configured phantom");
    auto* invert = app.add_subcommand("invert", "reconstruct the contrast from a measurement file");
    auto* land = app.add_subcommand("landscape", "sample the cost between three solution states");
    auto* validate = app.add_subcommand("validate", "run the solver and gradient self-checks");
    for (auto* c : {phantom, simulate, invert, land}) add_common(c, o);
    validate->add_option("--threads", o.threads, "worker threads");

    std::string data;
    invert->add_option("--data", data, "measurement CSV (default: <out>/measurements.csv)");
    land->add_option("--data", data, "measurement CSV (default: <out>/measurements.csv)");
    std::string cc_state, mr_state, act_state;
    int samples = 61;
    land->add_option("--cc", cc_state, "state file of the first reconstruction")->required();
    land->add_option("--mr", mr_state, "state file of the second reconstruction")->required();
    land->add_option("--act", act_state, "state file of the true solution")->required();
    land->add_option("--samples", samples, "samples per axis")->check(CLI::Range(2, 100000));

    CLI11_PARSE(app, argc, argv);

    using ccsi::ExitCode;
    try {
        if (validate->parsed()) {
            const bool ok = ccsi::cmd_validate(o.threads.value_or(1), std::cout);
            return ok ? 0 : static_cast<int>(ExitCode::numerical_failure);
        }
        const ccsi::RunConfig rc = resolve(o);
        const std::string data_path = data.empty() ? (std::filesystem::path(rc.output_dir) / "measurements.csv").string() : data;
        if (phantom->parsed()) {
            ccsi::cmd_phantom(rc, o.overwrite);
        } else if (simulate->parsed()) {
            ccsi::cmd_simulate(rc, o.overwrite);
        } else if (invert->parsed()) {
            const auto res = ccsi::cmd_invert(rc, data_path, o.overwrite, &std::cerr);
            for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
            if (!res.log.empty())
                std::cout << "final iteration " << res.log.back().iteration << "  cost " << res.log.back().cost_half
                          << "  err " << res.log.back().err << '\n';
        } else if (land->parsed()) {
            const auto l = ccsi::cmd_landscape(rc, data_path, cc_state, mr_state, act_state, samples, o.overwrite);
            const auto [r, c] = l.argmin();
            if (r >= 0)
                std::cout << "minimum at beta1=" << l.beta1[static_cast<std::size_t>(r)]
                          << " beta2=" << l.beta2[static_cast<std::size_t>(c)] << '\n';
        }
    } catch (const ccsi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::config_error);
    } catch (const ccsi::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::io_error);
    } catch (const ccsi::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical_failure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical_failure);
    }
    return 0;
}
