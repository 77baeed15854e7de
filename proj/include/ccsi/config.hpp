#pragma once

// Run configuration read from JSON. Every key carries its unit in the name;
// absent keys take the defaults below and the materialized document is what
// gets copied next to the outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccsi/csi.hpp"
#include "ccsi/phantom.hpp"
#include "ccsi/scenario.hpp"

namespace ccsi {

struct PhantomSpec {
    std::string shape = "austria"; // austria | cylinder | empty
    double delta_eps = austria_case1.delta_eps;
    double delta_sigma = austria_case1.delta_sigma;
    double center_x_m = 0.0, center_y_m = 0.0, radius_m = 0.2; // cylinder only
};

struct RunConfig {
    MeasurementConfig measurement = default_config();
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    double inversion_dx_m = 0.03;
    double synthesis_dx_m = 0.015;
    double domain_half_width_m = 1.2;
    double grid_half_width_m = 3.3;
    int pml_cells = 10;
    PhantomSpec phantom;
    Variant variant = Variant::cc;
    int max_iterations = 2048;
    int threads = 1;
    std::string output_dir = "out";

    [[nodiscard]] std::vector<std::string> problems() const
    {
        std::vector<std::string> out = measurement.problems();
        auto positive = [&](double v, const char* key) {
            if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(key) + " must be positive");
        };
        positive(inversion_dx_m, "inversion_dx_m");
        positive(synthesis_dx_m, "synthesis_dx_m");
        positive(domain_half_width_m, "domain_half_width_m");
        positive(grid_half_width_m, "grid_half_width_m");
        if (synthesis_dx_m > 0.0 && inversion_dx_m > 0.0 && !(synthesis_dx_m < inversion_dx_m))
            out.emplace_back("synthesis_dx_m must be finer than inversion_dx_m (inverse crime)");
        if (pml_cells < 1) out.emplace_back("pml_cells must be at least 1");
        if (measurement.radius_m > 0.0 && domain_half_width_m >= measurement.radius_m / std::sqrt(2.0))
            out.emplace_back("domain_half_width_m must keep the inversion domain inside the antenna circle");
        if (grid_half_width_m > 0.0 && inversion_dx_m > 0.0 &&
            !(grid_half_width_m >= measurement.radius_m + 2.0 * inversion_dx_m))
            out.emplace_back("grid_half_width_m must exceed radius_m by at least two inversion cells");
        if (phantom.shape != "austria" && phantom.shape != "cylinder" && phantom.shape != "empty")
            out.push_back("phantom.shape must be austria, cylinder or empty (got '" + phantom.shape + "')");
        if (!(phantom.delta_eps >= 0.0) || !(phantom.delta_sigma >= 0.0))
            out.emplace_back("phantom contrasts must be non-negative");
        if (phantom.shape == "cylinder" && !(phantom.radius_m > 0.0)) out.emplace_back("phantom.radius_m must be positive");
        if (max_iterations < 0) out.emplace_back("max_iterations must be non-negative");
        if (threads < 1) out.emplace_back("threads must be at least 1");
        if (std::isnan(snr_db)) out.emplace_back("snr_db must be a number or null");
        return out;
    }

    void validate() const
    {
        const auto p = problems();
        if (p.empty()) return;
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& s : p) os << "\n  - " << s;
        throw ConfigError(os.str());
    }
};

inline Subdomain inversion_domain(const RunConfig& rc)
{
    const Grid g = make_centered_grid(rc.grid_half_width_m, rc.inversion_dx_m, rc.pml_cells);
    return Subdomain::centered_square(g, rc.domain_half_width_m);
}

inline Subdomain synthesis_domain(const RunConfig& rc)
{
    const Grid g = make_centered_grid(rc.grid_half_width_m, rc.synthesis_dx_m, rc.pml_cells);
    return Subdomain::centered_square(g, rc.domain_half_width_m);
}

/// The configured object rasterized on `domain`.
inline ContrastMap build_phantom(const RunConfig& rc, const Subdomain& domain)
{
    const auto& ph = rc.phantom;
    if (ph.shape == "empty") return ContrastMap(static_cast<Eigen::Index>(domain.size()));
    if (ph.shape == "cylinder")
        return make_cylinder_phantom(domain, Point{ph.center_x_m, ph.center_y_m}, ph.radius_m, ph.delta_eps,
                                     ph.delta_sigma, 4);
    return make_austria_phantom(domain, ph.delta_eps, ph.delta_sigma);
}

inline nlohmann::json to_json(const RunConfig& rc)
{
    nlohmann::json j = config_to_json(rc.measurement, rc.snr_db, rc.seed);
    j["inversion_dx_m"] = rc.inversion_dx_m;
    j["synthesis_dx_m"] = rc.synthesis_dx_m;
    j["domain_half_width_m"] = rc.domain_half_width_m;
    j["grid_half_width_m"] = rc.grid_half_width_m;
    j["pml_cells"] = rc.pml_cells;
    nlohmann::json ph;
    ph["shape"] = rc.phantom.shape;
    ph["delta_eps"] = rc.phantom.delta_eps;
    ph["delta_sigma_s_per_m"] = rc.phantom.delta_sigma;
    if (rc.phantom.shape == "cylinder") {
        ph["center_m"] = {rc.phantom.center_x_m, rc.phantom.center_y_m};
        ph["radius_m"] = rc.phantom.radius_m;
    }
    j["phantom"] = ph;
    j["variant"] = to_string(rc.variant);
    j["max_iterations"] = rc.max_iterations;
    j["threads"] = rc.threads;
    j["output_dir"] = rc.output_dir;
    return j;
}

/// Parses every key it knows, collecting all problems before reporting.
inline RunConfig run_config_from_json(const nlohmann::json& j)
{
    std::vector<std::string> problems;
    RunConfig rc;
    if (!j.is_object()) throw ConfigError("invalid configuration:\n  - top level must be a JSON object");
    static const char* known[] = {"source_angles_deg", "receiver_relative_angles_deg", "radius_m", "frequencies_hz",
                                  "snr_db", "seed", "inversion_dx_m", "synthesis_dx_m", "domain_half_width_m",
                                  "grid_half_width_m", "pml_cells", "phantom", "variant", "max_iterations", "threads",
                                  "output_dir"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) problems.push_back("unknown key '" + key + "'");
    }
    rc.measurement = config_from_json(j, default_config(), problems);

    auto read = [&](const nlohmann::json& obj, const char* key, auto& dst, const std::string& prefix = "") {
        if (!obj.contains(key)) return;
        try {
            obj.at(key).get_to(dst);
        } catch (const nlohmann::json::exception&) {
            problems.push_back("key '" + prefix + key + "' has the wrong type");
        }
    };
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) read(j, "snr_db", rc.snr_db);
    if (j.contains("seed") && !(j.at("seed").is_number_unsigned() || (j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0)))
        problems.emplace_back("key 'seed' must be a non-negative integer");
    else
        read(j, "seed", rc.seed);
    read(j, "inversion_dx_m", rc.inversion_dx_m);
    if (j.contains("synthesis_dx_m"))
        read(j, "synthesis_dx_m", rc.synthesis_dx_m);
    else
        rc.synthesis_dx_m = 0.5 * rc.inversion_dx_m;
    read(j, "domain_half_width_m", rc.domain_half_width_m);
    read(j, "grid_half_width_m", rc.grid_half_width_m);
    read(j, "pml_cells", rc.pml_cells);
    read(j, "max_iterations", rc.max_iterations);
    read(j, "threads", rc.threads);
    read(j, "output_dir", rc.output_dir);
    if (j.contains("variant")) {
        std::string v;
        read(j, "variant", v);
        if (v == "cc")
            rc.variant = Variant::cc;
        else if (v == "plain")
            rc.variant = Variant::plain;
        else if (!v.empty())
            problems.push_back("variant must be 'cc' or 'plain' (got '" + v + "')");
    }
    if (j.contains("phantom")) {
        const auto& ph = j.at("phantom");
        if (!ph.is_object()) {
            problems.emplace_back("key 'phantom' must be an object");
        } else {
            read(ph, "shape", rc.phantom.shape, "phantom.");
            if (ph.contains("case")) {
                int c = 0;
                read(ph, "case", c, "phantom.");
                if (c == 1) {
                    rc.phantom.delta_eps = austria_case1.delta_eps;
                    rc.phantom.delta_sigma = austria_case1.delta_sigma;
                } else if (c == 2) {
                    rc.phantom.delta_eps = austria_case2.delta_eps;
                    rc.phantom.delta_sigma = austria_case2.delta_sigma;
                } else {
                    problems.emplace_back("phantom.case must be 1 or 2");
                }
            }
            read(ph, "delta_eps", rc.phantom.delta_eps, "phantom.");
            read(ph, "delta_sigma_s_per_m", rc.phantom.delta_sigma, "phantom.");
            read(ph, "radius_m", rc.phantom.radius_m, "phantom.");
            if (ph.contains("center_m")) {
                std::vector<double> c;
                read(ph, "center_m", c, "phantom.");
                if (c.size() == 2) {
                    rc.phantom.center_x_m = c[0];
                    rc.phantom.center_y_m = c[1];
                } else {
                    problems.emplace_back("phantom.center_m must hold two numbers");
                }
            }
            for (const auto& [key, value] : ph.items())
                if (key != "shape" && key != "case" && key != "delta_eps" && key != "delta_sigma_s_per_m" &&
                    key != "radius_m" && key != "center_m")
                    problems.push_back("unknown key 'phantom." + key + "'");
        }
    }
    for (auto& p : rc.problems())
        if (std::find(problems.begin(), problems.end(), p) == problems.end()) problems.push_back(std::move(p));
    if (!problems.empty()) {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& s : problems) os << "\n  - " << s;
        throw ConfigError(os.str());
    }
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

} // namespace ccsi
