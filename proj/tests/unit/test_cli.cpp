#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ccsi/commands.hpp"

using namespace ccsi;
namespace fs = std::filesystem;

namespace {

const char* small_config = R"({
  "source_angles_deg": [0, 90, 180, 270],
  "receiver_relative_angles_deg": [90, 120, 150, 180, 210, 240, 270],
  "frequencies_hz": [3.0e8, 4.0e8],
  "radius_m": 1.0,
  "snr_db": 40,
  "seed": 3,
  "inversion_dx_m": 0.06,
  "domain_half_width_m": 0.3,
  "grid_half_width_m": 1.3,
  "pml_cells": 8,
  "phantom": { "shape": "cylinder", "center_m": [0.05, 0.0], "radius_m": 0.15,
               "delta_eps": 1.0, "delta_sigma_s_per_m": 0.003 },
  "max_iterations": 4
})";

fs::path scratch(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("ccsi_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
    return p;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(CCSI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

} // namespace

TEST(Config, DefaultsValidate)
{
    const RunConfig rc = run_config_from_json(nlohmann::json::object());
    EXPECT_EQ(rc.variant, Variant::cc);
    EXPECT_EQ(rc.synthesis_dx_m, 0.5 * rc.inversion_dx_m);
    EXPECT_NO_THROW(rc.validate());
}

TEST(Config, CaseSelectsContrast)
{
    const auto rc = run_config_from_json(nlohmann::json::parse(R"({"phantom": {"case": 2}})"));
    EXPECT_EQ(rc.phantom.delta_eps, austria_case2.delta_eps);
    EXPECT_EQ(rc.phantom.delta_sigma, austria_case2.delta_sigma);
}

TEST(Config, AllProblemsReportedTogether)
{
    try {
        run_config_from_json(nlohmann::json::parse(
            R"({"radius_m": -1, "variant": "mr", "bogus": 1, "phantom": {"shape": "star", "extra": 0}})"));
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        for (const char* part : {"radius_m", "variant", "unknown key 'bogus'", "phantom.shape", "phantom.extra"})
            EXPECT_NE(msg.find(part), std::string::npos) << part << "\n" << msg;
    }
}

TEST(Config, InverseCrimeGuard)
{
    EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"inversion_dx_m": 0.03, "synthesis_dx_m": 0.03})")),
                 ConfigError);
}

TEST(Config, JsonRoundTrip)
{
    const auto rc = run_config_from_json(nlohmann::json::parse(small_config));
    const auto back = run_config_from_json(to_json(rc));
    EXPECT_EQ(to_json(back), to_json(rc));
    EXPECT_EQ(back.phantom.center_x_m, 0.05);
}

TEST(Cli, SimulateInvertIsReproducible)
{
    const auto d = scratch("pipeline");
    const auto cfg = write_file(d / "cfg.json", small_config);
    const std::string common = "--config " + cfg.string() + " --out " + (d / "run").string();
    ASSERT_EQ(run_cli("simulate " + common), 0);
    for (const char* f : {"measurements.csv", "measurement_config.json", "actual_solution.csv", "config_simulate.json",
                          "truth_delta_eps.csv", "truth_delta_sigma.pgm"})
        EXPECT_TRUE(fs::exists(d / "run" / f)) << f;

    // the copied config reproduces the run configuration
    const auto copied = load_run_config(d / "run" / "config_simulate.json");
    auto expected = nlohmann::json::parse(small_config);
    expected["output_dir"] = (d / "run").string();
    EXPECT_EQ(to_json(copied), to_json(run_config_from_json(expected)));
    EXPECT_EQ(copied.output_dir, (d / "run").string());

    ASSERT_EQ(run_cli("invert " + common), 0);
    const std::string first = slurp(d / "run" / "log_cc.csv");
    EXPECT_EQ(read_curves(d / "run" / "log_cc.csv").size(), 5u);

    // refuses to replace outputs without the flag
    EXPECT_EQ(run_cli("invert " + common), 4);
    ASSERT_EQ(run_cli("invert " + common + " --overwrite"), 0);
    EXPECT_EQ(slurp(d / "run" / "log_cc.csv"), first);

    ASSERT_EQ(run_cli("invert " + common + " --variant plain"), 0);
    EXPECT_TRUE(fs::exists(d / "run" / "contrast_plain_delta_eps.csv"));

    const std::string st = (d / "run").string();
    ASSERT_EQ(run_cli("landscape " + common + " --samples 5 --cc " + st + "/state_cc.csv --mr " + st +
                      "/state_plain.csv --act " + st + "/actual_solution.csv"),
              0);
    const auto l = read_landscape_csv(d / "run" / "landscape.csv");
    EXPECT_EQ(l.log10_cost.rows(), 5);
}

TEST(Cli, EmptyPhantomGivesNoScatteredField)
{
    const auto d = scratch("empty");
    auto j = nlohmann::json::parse(small_config);
    j["phantom"] = {{"shape", "empty"}};
    j["snr_db"] = nullptr;
    const auto cfg = write_file(d / "cfg.json", j.dump());
    ASSERT_EQ(run_cli("simulate --config " + cfg.string() + " --out " + (d / "run").string()), 0);
    const auto rc = load_run_config(cfg);
    const auto ms = read_measurements_csv(d / "run" / "measurements.csv", rc.measurement);
    double worst = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < ms.scattered.size(); ++p)
        for (std::size_t i = 0; i < ms.scattered[p].size(); ++i) {
            worst = std::max(worst, ms.scattered[p][i].cwiseAbs().maxCoeff());
            scale = std::max(scale, ms.incident[p][i].cwiseAbs().maxCoeff());
        }
    EXPECT_LT(worst, 1e-12 * scale);

    // inverting zero data leaves a zero contrast
    ASSERT_EQ(run_cli("invert --config " + cfg.string() + " --out " + (d / "run").string()), 0);
    const auto c = read_contrast_maps(d / "run" / "contrast_cc");
    EXPECT_EQ(c.delta_eps.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_FALSE(slurp(d / "run" / "warnings_cc.txt").empty());
}

TEST(Cli, ExitCodes)
{
    const auto d = scratch("codes");
    const auto bad = write_file(d / "bad.json", R"({"radius_m": "far"})");
    EXPECT_EQ(run_cli("simulate --config " + bad.string() + " --out " + d.string()), 2);
    const auto broken = write_file(d / "broken.json", "{ not json");
    EXPECT_EQ(run_cli("phantom --config " + broken.string() + " --out " + d.string()), 2);
    EXPECT_EQ(run_cli("phantom --config " + (d / "missing.json").string()), 4);
    const auto cfg = write_file(d / "cfg.json", small_config);
    EXPECT_EQ(run_cli("invert --config " + cfg.string() + " --out " + (d / "none").string()), 4);
    EXPECT_NE(run_cli("bogus-command"), 0);
}

TEST(Cli, PhantomWritesMaps)
{
    const auto d = scratch("phantom");
    const auto cfg = write_file(d / "cfg.json", small_config);
    ASSERT_EQ(run_cli("phantom --config " + cfg.string() + " --out " + d.string()), 0);
    const auto m = read_contrast_maps(d / "phantom");
    EXPECT_NEAR(m.delta_eps.maxCoeff(), 1.0, 1e-12);
    EXPECT_GE(m.delta_sigma.minCoeff(), 0.0);
}
