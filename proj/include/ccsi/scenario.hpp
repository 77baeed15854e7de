#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ccsi/contrast.hpp"
#include "ccsi/csv.hpp"
#include "ccsi/fdfd.hpp"
#include "ccsi/parallel.hpp"

namespace ccsi {

/// Per (source, frequency) table, indexed [p][i].
template <class T>
using SourceFreqTable = std::vector<std::vector<T>>;

template <class T>
SourceFreqTable<T> make_table(std::size_t sources, std::size_t freqs, const T& init = T{})
{
    return SourceFreqTable<T>(sources, std::vector<T>(freqs, init));
}

/// Transmitters on a circle; receivers placed at angles relative to the
/// transmitter azimuth on the same circle.
struct MeasurementConfig {
    std::vector<double> source_angles_deg;
    std::vector<double> receiver_relative_angles_deg;
    double radius_m = 0.0;
    std::vector<double> frequencies_hz;

    [[nodiscard]] std::size_t sources() const { return source_angles_deg.size(); }
    [[nodiscard]] std::size_t receivers() const { return receiver_relative_angles_deg.size(); }
    [[nodiscard]] std::size_t frequencies() const { return frequencies_hz.size(); }
    [[nodiscard]] double omega(std::size_t i) const { return angular_frequency(frequencies_hz[i]); }

    [[nodiscard]] std::vector<double> omegas() const
    {
        std::vector<double> w;
        for (std::size_t i = 0; i < frequencies(); ++i) w.push_back(omega(i));
        return w;
    }

    [[nodiscard]] Point source_position(std::size_t p) const
    {
        const double a = source_angles_deg[p] * pi / 180.0;
        return {radius_m * std::cos(a), radius_m * std::sin(a)};
    }

    [[nodiscard]] std::vector<Point> receiver_positions(std::size_t p) const
    {
        std::vector<Point> out;
        for (double rel : receiver_relative_angles_deg) {
            const double a = (source_angles_deg[p] + rel) * pi / 180.0;
            out.push_back({radius_m * std::cos(a), radius_m * std::sin(a)});
        }
        return out;
    }

    /// Collects every violated invariant into one message.
    [[nodiscard]] std::vector<std::string> problems() const
    {
        std::vector<std::string> out;
        if (!(radius_m > 0.0)) out.emplace_back("radius_m must be positive");
        if (source_angles_deg.empty()) out.emplace_back("source_angles_deg must not be empty");
        if (receiver_relative_angles_deg.empty()) out.emplace_back("receiver_relative_angles_deg must not be empty");
        if (frequencies_hz.empty()) out.emplace_back("frequencies_hz must not be empty");
        for (std::size_t i = 0; i < frequencies_hz.size(); ++i) {
            if (!(frequencies_hz[i] > 0.0)) out.emplace_back("frequencies_hz must be positive");
            if (i > 0 && !(frequencies_hz[i] > frequencies_hz[i - 1]))
                out.emplace_back("frequencies_hz must be strictly increasing");
        }
        return out;
    }

    void validate() const
    {
        const auto p = problems();
        if (p.empty()) return;
        std::string msg = "invalid measurement configuration:";
        for (const auto& s : p) msg += " " + s + ";";
        throw ConfigError(msg);
    }
};

/// 12 sources every 30 deg, 49 receivers from 60 to 300 deg (step 5) relative
/// to the source, on a 3 m circle, at 0.1 ... 0.5 GHz.
inline MeasurementConfig default_config()
{
    MeasurementConfig c;
    for (int a = 0; a <= 330; a += 30) c.source_angles_deg.push_back(a);
    for (int a = 60; a <= 300; a += 5) c.receiver_relative_angles_deg.push_back(a);
    c.radius_m = 3.0;
    c.frequencies_hz = {0.1e9, 0.2e9, 0.3e9, 0.4e9, 0.5e9};
    return c;
}

/// Receiver data per (source, frequency). Incident and total tables may be
/// empty when only scattered data is known.
struct MeasurementSet {
    MeasurementConfig config;
    SourceFreqTable<CVector> scattered;
    SourceFreqTable<CVector> incident;
    SourceFreqTable<CVector> total;
    std::uint64_t seed = 0;
    double snr_db = std::numeric_limits<double>::infinity();
    std::string synthesis_grid;

    [[nodiscard]] bool has_all() const { return !incident.empty() && !total.empty(); }
};

struct SynthesisOptions {
    double inversion_cell = 0.0; // when > 0, the synthesis grid must be strictly finer
    FdfdOptions fdfd{};
    int threads = 1;
};

/// Per-frequency fields of a set of sources: incident (background) and total
/// (with the object), on the full grid.
inline std::pair<CMatrix, CMatrix> solve_source_fields(const MeasurementConfig& cfg, const Subdomain& domain,
                                                       const ContrastMap& object, std::size_t i,
                                                       const FdfdOptions& fdfd = {})
{
    const Grid& g = domain.grid();
    const double w = cfg.omega(i);
    CMatrix sources(static_cast<Eigen::Index>(g.cell_count()), static_cast<Eigen::Index>(cfg.sources()));
    for (std::size_t p = 0; p < cfg.sources(); ++p) sources.col(static_cast<Eigen::Index>(p)) = point_source(g, cfg.source_position(p));
    const auto background = assemble_tm(g, w, fdfd);
    const auto medium = assemble_tm_with_contrast(g, w, domain.extend(chi_at_frequency(object, w)), fdfd);
    return {background->solve(sources), medium->solve(sources)};
}

/// Simulates the measurement without and with the object on the synthesis grid.
inline MeasurementSet synthesize(const MeasurementConfig& cfg, const ContrastMap& phantom, const Subdomain& synthesis,
                                 const SynthesisOptions& opts = {})
{
    cfg.validate();
    if (phantom.size() != static_cast<Eigen::Index>(synthesis.size()))
        throw std::invalid_argument("synthesize: phantom does not match the synthesis domain");
    const Grid& g = synthesis.grid();
    if (opts.inversion_cell > 0.0 && !(std::max(g.dx, g.dy) < opts.inversion_cell))
        throw ConfigError("synthesize: synthesis grid must be strictly finer than the inversion grid");

    std::vector<ReceiverOperator> rx;
    for (std::size_t p = 0; p < cfg.sources(); ++p) rx.emplace_back(g, cfg.receiver_positions(p));

    MeasurementSet ms;
    ms.config = cfg;
    ms.synthesis_grid = g.describe();
    const std::size_t P = cfg.sources(), I = cfg.frequencies();
    ms.scattered = make_table<CVector>(P, I);
    ms.incident = make_table<CVector>(P, I);
    ms.total = make_table<CVector>(P, I);
    parallel_for(I, opts.threads, [&](std::size_t i) {
        CMatrix inc, tot;
        try {
            std::tie(inc, tot) = solve_source_fields(cfg, synthesis, phantom, i, opts.fdfd);
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << "synthesize: frequency index " << i << " (" << cfg.frequencies_hz[i] << " Hz): " << e.what();
            throw NumericalError(os.str());
        }
        for (std::size_t p = 0; p < P; ++p) {
            ms.incident[p][i] = rx[p].sample(inc.col(static_cast<Eigen::Index>(p)));
            ms.total[p][i] = rx[p].sample(tot.col(static_cast<Eigen::Index>(p)));
            ms.scattered[p][i] = ms.total[p][i] - ms.incident[p][i];
        }
    });
    return ms;
}

/// Adds circular complex Gaussian noise n to the scattered data and splits it
/// over the other two records (total + n/2, incident - n/2). The noise
/// variance makes sum_p |scattered|^2 / E[sum_p |n|^2] = 10^(snr_db/10) per
/// frequency.
inline MeasurementSet add_noise(const MeasurementSet& ms, double snr_db, std::uint64_t seed)
{
    if (!ms.has_all()) throw std::invalid_argument("add_noise: incident and total data are required");
    MeasurementSet out = ms;
    out.seed = seed;
    out.snr_db = snr_db;
    if (std::isinf(snr_db) && snr_db > 0) return out;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t P = ms.config.sources(), I = ms.config.frequencies();
    for (std::size_t i = 0; i < I; ++i) {
        double signal = 0.0;
        std::size_t samples = 0;
        for (std::size_t p = 0; p < P; ++p) {
            signal += ms.scattered[p][i].squaredNorm();
            samples += static_cast<std::size_t>(ms.scattered[p][i].size());
        }
        const double variance = signal / (static_cast<double>(samples) * std::pow(10.0, snr_db / 10.0));
        const double sd = std::sqrt(0.5 * variance);
        for (std::size_t p = 0; p < P; ++p) {
            CVector n(ms.scattered[p][i].size());
            for (Eigen::Index q = 0; q < n.size(); ++q) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                n[q] = Complex(sd * re, sd * im);
            }
            out.total[p][i] = ms.total[p][i] + 0.5 * n;
            out.incident[p][i] = ms.incident[p][i] - 0.5 * n;
            // the difference rather than scattered + n keeps total - incident
            // = scattered bit-exact
            out.scattered[p][i] = out.total[p][i] - out.incident[p][i];
        }
    }
    return out;
}

/// Index of the receiver diametrically opposite the source (relative 180 deg).
inline std::size_t opposite_receiver(const MeasurementConfig& cfg)
{
    for (std::size_t q = 0; q < cfg.receivers(); ++q) {
        const double rel = std::fmod(std::fmod(cfg.receiver_relative_angles_deg[q], 360.0) + 360.0, 360.0);
        if (std::abs(rel - 180.0) < 1e-9) return q;
    }
    throw ConfigError("calibration needs a receiver at 180 deg relative to the source");
}

/// One complex factor per (p, i) mapping the analytic line-source field onto
/// the measured incident field at the opposite receiver.
inline SourceFreqTable<Complex> calibrate_incident(const MeasurementConfig& cfg,
                                                   const SourceFreqTable<CVector>& measured_incident)
{
    cfg.validate();
    const std::size_t q = opposite_receiver(cfg);
    const std::size_t P = cfg.sources(), I = cfg.frequencies();
    if (measured_incident.size() != P) throw std::invalid_argument("calibrate_incident: table size mismatch");
    auto factors = make_table<Complex>(P, I);
    for (std::size_t p = 0; p < P; ++p) {
        const Point rx = cfg.receiver_positions(p)[q];
        for (std::size_t i = 0; i < I; ++i) {
            const Complex model = line_source_field(cfg.source_position(p), rx, cfg.omega(i));
            if (std::abs(model) == 0.0) throw NumericalError("calibrate_incident: analytic field vanishes at receiver");
            factors[p][i] = measured_incident[p][i][static_cast<Eigen::Index>(q)] / model;
        }
    }
    return factors;
}

/// factor * analytic line-source field on the domain cells.
inline SourceFreqTable<CVector> calibrated_incident_fields(const MeasurementConfig& cfg, const Subdomain& domain,
                                                           const SourceFreqTable<Complex>& factors)
{
    const std::size_t P = cfg.sources(), I = cfg.frequencies();
    auto out = make_table<CVector>(P, I);
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t i = 0; i < I; ++i) {
            CVector e(static_cast<Eigen::Index>(domain.size()));
            for (std::size_t k = 0; k < domain.size(); ++k)
                e[static_cast<Eigen::Index>(k)] = line_source_field(cfg.source_position(p), domain.center(k), cfg.omega(i));
            out[p][i] = factors[p][i] * e;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json config_to_json(const MeasurementConfig& c, double snr_db, std::uint64_t seed)
{
    nlohmann::json j;
    j["source_angles_deg"] = c.source_angles_deg;
    j["receiver_relative_angles_deg"] = c.receiver_relative_angles_deg;
    j["radius_m"] = c.radius_m;
    j["frequencies_hz"] = c.frequencies_hz;
    if (std::isinf(snr_db)) j["snr_db"] = nullptr;
    else j["snr_db"] = snr_db;
    j["seed"] = seed;
    return j;
}

/// Reads the measurement keys, falling back to `defaults` for absent ones.
/// Type errors are appended to `problems`.
inline MeasurementConfig config_from_json(const nlohmann::json& j, const MeasurementConfig& defaults,
                                          std::vector<std::string>& problems)
{
    MeasurementConfig c = defaults;
    auto read = [&](const char* key, auto& dst) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(dst);
        } catch (const nlohmann::json::exception&) {
            problems.emplace_back(std::string("key '") + key + "' has the wrong type");
        }
    };
    read("source_angles_deg", c.source_angles_deg);
    read("receiver_relative_angles_deg", c.receiver_relative_angles_deg);
    read("radius_m", c.radius_m);
    read("frequencies_hz", c.frequencies_hz);
    for (auto& p : c.problems()) problems.push_back(std::move(p));
    return c;
}

inline constexpr const char* measurement_csv_header =
    "freq_hz,src_index,rx_index,re_scattered,im_scattered,re_incident,im_incident,re_total,im_total";

inline void write_measurements_csv(const MeasurementSet& ms, const std::filesystem::path& path)
{
    auto os = csv::open_for_write(path);
    os << measurement_csv_header << '\n';
    const auto& c = ms.config;
    for (std::size_t i = 0; i < c.frequencies(); ++i) {
        for (std::size_t p = 0; p < c.sources(); ++p) {
            for (std::size_t q = 0; q < c.receivers(); ++q) {
                const auto qi = static_cast<Eigen::Index>(q);
                const Complex s = ms.scattered[p][i][qi];
                const Complex inc = ms.has_all() ? ms.incident[p][i][qi] : Complex(0.0, 0.0);
                const Complex tot = ms.has_all() ? ms.total[p][i][qi] : s;
                os << csv::format(c.frequencies_hz[i]) << ',' << p << ',' << q << ',' << csv::format(s.real()) << ','
                   << csv::format(s.imag()) << ',' << csv::format(inc.real()) << ',' << csv::format(inc.imag()) << ','
                   << csv::format(tot.real()) << ',' << csv::format(tot.imag()) << '\n';
            }
        }
    }
    if (!os) throw IoError("failed writing " + path.string());
}

/// Reads a measurement CSV laid out for `cfg`. Every (freq, src, rx) triple
/// of the configuration must be present exactly once.
inline MeasurementSet read_measurements_csv(const std::filesystem::path& path, const MeasurementConfig& cfg)
{
    auto is = csv::open_for_read(path);
    std::string line;
    if (!std::getline(is, line) || csv::split(line) != csv::split(measurement_csv_header))
        throw IoError(path.string() + ": unexpected header");
    const std::size_t P = cfg.sources(), I = cfg.frequencies(), Q = cfg.receivers();
    MeasurementSet ms;
    ms.config = cfg;
    ms.scattered = make_table<CVector>(P, I, CVector::Zero(static_cast<Eigen::Index>(Q)));
    ms.incident = ms.scattered;
    ms.total = ms.scattered;
    std::vector<char> seen(P * I * Q, 0);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line);
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 9) throw IoError(ctx + ": expected 9 columns");
        const double freq = csv::parse_double(f[0], ctx);
        std::size_t i = I;
        for (std::size_t k = 0; k < I; ++k)
            if (std::abs(cfg.frequencies_hz[k] - freq) <= 1e-9 * cfg.frequencies_hz[k]) i = k;
        const long p = csv::parse_int(f[1], ctx), q = csv::parse_int(f[2], ctx);
        if (i == I || p < 0 || q < 0 || static_cast<std::size_t>(p) >= P || static_cast<std::size_t>(q) >= Q)
            throw IoError(ctx + ": row does not match the measurement configuration");
        auto& flag = seen[(i * P + static_cast<std::size_t>(p)) * Q + static_cast<std::size_t>(q)];
        if (flag) throw IoError(ctx + ": duplicate row");
        flag = 1;
        ms.scattered[p][i][q] = Complex(csv::parse_double(f[3], ctx), csv::parse_double(f[4], ctx));
        ms.incident[p][i][q] = Complex(csv::parse_double(f[5], ctx), csv::parse_double(f[6], ctx));
        ms.total[p][i][q] = Complex(csv::parse_double(f[7], ctx), csv::parse_double(f[8], ctx));
    }
    for (char s : seen)
        if (!s) throw IoError(path.string() + ": missing rows for the measurement configuration");
    return ms;
}

} // namespace ccsi
