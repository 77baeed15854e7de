#pragma once

// Cost-landscape sampling between reconstructed and actual solutions, plus
// the CSV/PGM exporters for logs, contrast maps and solution states.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ccsi/csi.hpp"
#include "ccsi/csv.hpp"

namespace ccsi {

/// Per-frequency contrasts and total fields on the inversion domain.
struct SolutionPoint {
    std::vector<CVector> chi;       // [i]
    SourceFreqTable<CVector> e_tot; // [p][i]

    [[nodiscard]] std::size_t sources() const { return e_tot.size(); }
    [[nodiscard]] std::size_t frequencies() const { return chi.size(); }
    [[nodiscard]] Eigen::Index cells() const { return chi.empty() ? 0 : chi.front().size(); }

    void check_shape(std::size_t P, std::size_t I, Eigen::Index n) const
    {
        bool ok = chi.size() == I && e_tot.size() == P;
        for (const auto& c : chi) ok = ok && c.size() == n;
        for (const auto& row : e_tot) {
            ok = ok && row.size() == I;
            for (const auto& e : row) ok = ok && e.size() == n;
        }
        if (!ok) throw std::invalid_argument("SolutionPoint: dimensions do not match");
    }
};

inline SolutionPoint solution_from_state(const InversionState& s) { return {s.chi, s.e_tot}; }

/// The true solution on the inversion grid: the known contrast and the total
/// fields that satisfy the discrete state equation with it.
inline SolutionPoint actual_solution(const InversionProblem& prob, const ContrastMap& truth, const FdfdOptions& fdfd = {},
                                     int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    SolutionPoint x;
    x.chi.resize(I);
    x.e_tot = make_table<CVector>(P, I);
    parallel_for(I, threads, [&](std::size_t i) {
        x.chi[i] = chi_at_frequency(truth, prob.omegas[i]);
        const auto medium = assemble_tm_with_contrast(prob.domain.grid(), prob.omegas[i], prob.domain.extend(x.chi[i]), fdfd);
        for (std::size_t p = 0; p < P; ++p) {
            // e = e_inc + A^{-1} E chi e  <=>  (A - chi) e_s = chi e_inc
            const CVector rhs = prob.domain.extend(CVector(x.chi[i].cwiseProduct(prob.incident[p][i])));
            x.e_tot[p][i] = prob.incident[p][i] + prob.domain.restrict_field(medium->solve(rhs));
        }
    });
    return x;
}

struct SampleWeights {
    double cc, act, mr;
};

/// Weights of x_cc, x_act and x_mr at (beta1, beta2).
inline SampleWeights sample_weights(double beta1, double beta2)
{
    return {beta2 * (beta1 + 1.0), -beta2 * beta1, -(beta2 - 1.0) * beta1};
}

inline SolutionPoint sample_solution_space(const SolutionPoint& x_cc, const SolutionPoint& x_mr,
                                           const SolutionPoint& x_act, double beta1, double beta2)
{
    const std::size_t P = x_cc.sources(), I = x_cc.frequencies();
    const Eigen::Index n = x_cc.cells();
    x_cc.check_shape(P, I, n);
    x_mr.check_shape(P, I, n);
    x_act.check_shape(P, I, n);
    const auto w = sample_weights(beta1, beta2);
    auto mix = [&](const CVector& a, const CVector& m, const CVector& t) -> CVector {
        return w.cc * a + w.act * t + w.mr * m;
    };
    SolutionPoint out;
    out.chi.resize(I);
    out.e_tot = make_table<CVector>(P, I);
    for (std::size_t i = 0; i < I; ++i) out.chi[i] = mix(x_cc.chi[i], x_mr.chi[i], x_act.chi[i]);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t i = 0; i < I; ++i) out.e_tot[p][i] = mix(x_cc.e_tot[p][i], x_mr.e_tot[p][i], x_act.e_tot[p][i]);
    return out;
}

/// Source-update cost with all three terms at a solution point, with the
/// contrast sources taken as chi * e_tot and eta_d from the point's contrast.
/// Returns NaN when a normalization vanishes.
inline double cost_at_point(const InversionProblem& prob, const SolutionPoint& x)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    x.check_shape(P, I, static_cast<Eigen::Index>(prob.domain.size()));
    double c = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
        double ys = 0.0, ds = 0.0, sum_s = 0.0, sum_d = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            ys += prob.data[p][i].squaredNorm();
            ds += x.chi[i].cwiseProduct(prob.incident[p][i]).squaredNorm();
            const auto r = residuals_for(prob, p, i, x.chi[i], x.chi[i].cwiseProduct(x.e_tot[p][i]));
            sum_s += r.rho.squaredNorm() + r.xi.squaredNorm();
            sum_d += r.gamma.squaredNorm();
        }
        if (!(ys > 0.0) || !(ds > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        c += sum_s / ys + sum_d / ds;
    }
    return c;
}

/// Evaluates cost_at_point on the two-parameter family without further
/// solves: with chi and e_tot both affine in the three landmarks, every
/// residual is a polynomial combination of precomputed propagated terms.
class LandscapeEvaluator {
public:
    LandscapeEvaluator(const InversionProblem& prob, const SolutionPoint& x_cc, const SolutionPoint& x_mr,
                       const SolutionPoint& x_act, int threads = 1)
        : prob_(&prob)
    {
        const std::size_t P = prob.sources(), I = prob.frequencies();
        const auto n = static_cast<Eigen::Index>(prob.domain.size());
        const SolutionPoint* pts[3] = {&x_cc, &x_act, &x_mr};
        for (const auto* x : pts) x->check_shape(P, I, n);
        chi_.assign(I, {});
        for (std::size_t i = 0; i < I; ++i)
            for (int a = 0; a < 3; ++a) chi_[i][a] = pts[a]->chi[i];
        terms_.assign(P, std::vector<Terms>(I));
        parallel_for(P * I, threads, [&](std::size_t k) {
            const std::size_t p = k / I, i = k % I;
            Terms& t = terms_[p][i];
            for (int c = 0; c < 3; ++c) {
                t.chi_inc[c] = pts[c]->chi[i].cwiseProduct(prob.incident[p][i]);
                t.phi_chi_inc[c] = propagate(prob, p, i, t.chi_inc[c]).data;
            }
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const int ab = 3 * a + b;
                    t.j[ab] = pts[a]->chi[i].cwiseProduct(pts[b]->e_tot[p][i]);
                    const auto u = propagate(prob, p, i, t.j[ab]);
                    t.phi_j[ab] = u.data;
                    t.k_j[ab] = u.field;
                    for (int c = 0; c < 3; ++c)
                        t.phi_chi_k_j[9 * c + ab] = propagate(prob, p, i, CVector(pts[c]->chi[i].cwiseProduct(u.field))).data;
                }
            }
        });
    }

    [[nodiscard]] double cost(double beta1, double beta2) const
    {
        const auto sw = sample_weights(beta1, beta2);
        const double w[3] = {sw.cc, sw.act, sw.mr};
        const auto& prob = *prob_;
        const std::size_t P = prob.sources(), I = prob.frequencies();
        double total = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
            CVector chi = w[0] * chi_[i][0] + w[1] * chi_[i][1] + w[2] * chi_[i][2];
            double ys = 0.0, ds = 0.0, sum_s = 0.0, sum_d = 0.0;
            for (std::size_t p = 0; p < P; ++p) {
                const Terms& t = terms_[p][i];
                const CVector& y = prob.data[p][i];
                CVector chi_inc = w[0] * t.chi_inc[0] + w[1] * t.chi_inc[1] + w[2] * t.chi_inc[2];
                CVector j = CVector::Zero(chi.size()), kj = CVector::Zero(chi.size());
                CVector rho = y, xi = y;
                for (int c = 0; c < 3; ++c) xi -= w[c] * t.phi_chi_inc[c];
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        const int ab = 3 * a + b;
                        const double wab = w[a] * w[b];
                        j += wab * t.j[ab];
                        kj += wab * t.k_j[ab];
                        rho -= wab * t.phi_j[ab];
                        for (int c = 0; c < 3; ++c) xi -= (w[c] * wab) * t.phi_chi_k_j[9 * c + ab];
                    }
                }
                const CVector gamma = chi_inc + chi.cwiseProduct(kj) - j;
                ys += y.squaredNorm();
                ds += chi_inc.squaredNorm();
                sum_s += rho.squaredNorm() + xi.squaredNorm();
                sum_d += gamma.squaredNorm();
            }
            if (!(ys > 0.0) || !(ds > 0.0)) return std::numeric_limits<double>::quiet_NaN();
            total += sum_s / ys + sum_d / ds;
        }
        return total;
    }

private:
    struct Terms {
        CVector chi_inc[3];       // chi_c e_inc
        CVector phi_chi_inc[3];   // Phi chi_c e_inc
        CVector j[9];             // chi_a e_b
        CVector phi_j[9];         // Phi chi_a e_b
        CVector k_j[9];           // K chi_a e_b
        CVector phi_chi_k_j[27];  // Phi chi_c K chi_a e_b
    };
    const InversionProblem* prob_;
    std::vector<std::array<CVector, 3>> chi_;
    std::vector<std::vector<Terms>> terms_;
};

/// Equally spaced sample positions including both ends.
inline std::vector<double> linspace(double lo, double hi, int count)
{
    if (count < 2) throw std::invalid_argument("linspace: need at least two samples");
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (count - 1);
    return v;
}

struct Landscape {
    std::vector<double> beta1, beta2;
    Eigen::MatrixXd log10_cost; // rows follow beta1, columns beta2

    /// Row and column of the smallest finite value.
    [[nodiscard]] std::pair<Eigen::Index, Eigen::Index> argmin() const
    {
        Eigen::Index br = -1, bc = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < log10_cost.rows(); ++r)
            for (Eigen::Index c = 0; c < log10_cost.cols(); ++c)
                if (std::isfinite(log10_cost(r, c)) && log10_cost(r, c) < best) {
                    best = log10_cost(r, c);
                    br = r;
                    bc = c;
                }
        return {br, bc};
    }
};

/// log10 of costfn(beta1, beta2) over the grid; failed or non-positive
/// evaluations become NaN.
template <class CostFn>
Landscape landscape(CostFn&& costfn, std::vector<double> beta1, std::vector<double> beta2, int threads = 1)
{
    Landscape out;
    out.beta1 = std::move(beta1);
    out.beta2 = std::move(beta2);
    const auto rows = static_cast<Eigen::Index>(out.beta1.size());
    const auto cols = static_cast<Eigen::Index>(out.beta2.size());
    out.log10_cost.resize(rows, cols);
    parallel_for(static_cast<std::size_t>(rows * cols), threads, [&](std::size_t k) {
        const auto r = static_cast<Eigen::Index>(k) / cols, c = static_cast<Eigen::Index>(k) % cols;
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            const double cost = costfn(out.beta1[static_cast<std::size_t>(r)], out.beta2[static_cast<std::size_t>(c)]);
            if (cost > 0.0) v = std::log10(cost);
        } catch (const std::exception&) {
        }
        out.log10_cost(r, c) = v;
    });
    return out;
}

/// Landscape of the three-term cost around the given landmarks on the
/// default 61 x 61 grid over [-1.5, 1.5]^2.
inline Landscape cost_landscape(const InversionProblem& prob, const SolutionPoint& x_cc, const SolutionPoint& x_mr,
                                const SolutionPoint& x_act, int samples = 61, double half_range = 1.5, int threads = 1)
{
    const LandscapeEvaluator eval(prob, x_cc, x_mr, x_act, threads);
    const auto axis = linspace(-half_range, half_range, samples);
    return landscape([&](double b1, double b2) { return eval.cost(b1, b2); }, axis, axis, threads);
}

// ---------------------------------------------------------------------------
// Files

inline constexpr const char* log_csv_header = "iteration,cost_half,cost_full,err,alpha_mean,beta";

inline void export_curves(const std::vector<IterationRecord>& log, const std::filesystem::path& path)
{
    auto os = csv::open_for_write(path);
    os << log_csv_header << '\n';
    for (const auto& r : log)
        os << r.iteration << ',' << csv::format(r.cost_half) << ',' << csv::format(r.cost_full) << ','
           << csv::format(r.err) << ',' << csv::format(r.alpha_mean) << ',' << csv::format(r.beta) << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

inline std::vector<IterationRecord> read_curves(const std::filesystem::path& path)
{
    auto is = csv::open_for_read(path);
    std::string line;
    if (!std::getline(is, line) || csv::split(line) != csv::split(log_csv_header))
        throw IoError(path.string() + ": unexpected log header");
    std::vector<IterationRecord> log;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 6) throw IoError(path.string() + ": malformed log row '" + line + "'");
        IterationRecord r;
        r.iteration = static_cast<int>(csv::parse_int(f[0], path.string()));
        r.cost_half = csv::parse_double(f[1], path.string());
        r.cost_full = csv::parse_double(f[2], path.string());
        r.err = csv::parse_double(f[3], path.string());
        r.alpha_mean = csv::parse_double(f[4], path.string());
        r.beta = csv::parse_double(f[5], path.string());
        log.push_back(r);
    }
    return log;
}

/// A per-cell real map on a rectangular domain.
struct MapData {
    int nx = 0, ny = 0;
    double dx = 0.0, dy = 0.0, origin_x = 0.0, origin_y = 0.0; // origin = first cell centre
    RVector values;                                            // row-major, row 0 at origin_y
};

inline MapData map_of(const Subdomain& domain, const RVector& values)
{
    if (!domain.is_box()) throw std::invalid_argument("map export needs a rectangular domain");
    if (values.size() != static_cast<Eigen::Index>(domain.size()))
        throw std::invalid_argument("map export: value count does not match the domain");
    MapData m;
    m.nx = domain.box_nx();
    m.ny = domain.box_ny();
    m.dx = domain.grid().dx;
    m.dy = domain.grid().dy;
    m.origin_x = domain.extent().first.x;
    m.origin_y = domain.extent().first.y;
    m.values = values;
    return m;
}

inline void write_map_csv(const MapData& m, const std::filesystem::path& path)
{
    auto os = csv::open_for_write(path);
    os << "nx,ny,dx,dy,origin_x,origin_y\n";
    os << m.nx << ',' << m.ny << ',' << csv::format(m.dx) << ',' << csv::format(m.dy) << ',' << csv::format(m.origin_x)
       << ',' << csv::format(m.origin_y) << '\n';
    for (int iy = 0; iy < m.ny; ++iy) {
        for (int ix = 0; ix < m.nx; ++ix) {
            if (ix) os << ',';
            os << csv::format(m.values[iy * m.nx + ix]);
        }
        os << '\n';
    }
    if (!os) throw IoError("failed writing " + path.string());
}

inline MapData read_map_csv(const std::filesystem::path& path)
{
    auto is = csv::open_for_read(path);
    const std::string ctx = path.string();
    std::string line;
    if (!std::getline(is, line) || csv::split(line) != csv::split("nx,ny,dx,dy,origin_x,origin_y"))
        throw IoError(ctx + ": unexpected map header");
    if (!std::getline(is, line)) throw IoError(ctx + ": missing map dimensions");
    const auto h = csv::split(line);
    if (h.size() != 6) throw IoError(ctx + ": malformed map dimensions");
    MapData m;
    m.nx = static_cast<int>(csv::parse_int(h[0], ctx));
    m.ny = static_cast<int>(csv::parse_int(h[1], ctx));
    m.dx = csv::parse_double(h[2], ctx);
    m.dy = csv::parse_double(h[3], ctx);
    m.origin_x = csv::parse_double(h[4], ctx);
    m.origin_y = csv::parse_double(h[5], ctx);
    if (m.nx <= 0 || m.ny <= 0) throw IoError(ctx + ": invalid map dimensions");
    m.values.resize(static_cast<Eigen::Index>(m.nx) * m.ny);
    for (int iy = 0; iy < m.ny; ++iy) {
        if (!std::getline(is, line)) throw IoError(ctx + ": missing map row " + std::to_string(iy));
        const auto f = csv::split(line);
        if (f.size() != static_cast<std::size_t>(m.nx)) throw IoError(ctx + ": wrong length in map row " + std::to_string(iy));
        for (int ix = 0; ix < m.nx; ++ix) m.values[iy * m.nx + ix] = csv::parse_double(f[static_cast<std::size_t>(ix)], ctx);
    }
    return m;
}

/// 16-bit binary PGM with values mapped linearly from [min, max] to
/// [0, 65535]; the top image row is the largest y. The extrema go to
/// `<path>.txt`.
inline void write_map_pgm(const MapData& m, const std::filesystem::path& path)
{
    if (m.values.size() == 0) throw std::invalid_argument("write_map_pgm: empty map");
    const double lo = m.values.minCoeff(), hi = m.values.maxCoeff();
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("write_map_pgm: non-finite values");
    auto os = csv::open_for_write(path);
    os << "P5\n" << m.nx << ' ' << m.ny << "\n65535\n";
    for (int iy = m.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < m.nx; ++ix) {
            const double v = m.values[iy * m.nx + ix];
            const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            const auto level = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
            os.put(static_cast<char>(level >> 8));
            os.put(static_cast<char>(level & 0xff));
        }
    }
    if (!os) throw IoError("failed writing " + path.string());
    auto side = csv::open_for_write(std::filesystem::path(path.string() + ".txt"));
    side << "min " << csv::format(lo) << "\nmax " << csv::format(hi) << '\n';
    if (!side) throw IoError("failed writing " + path.string() + ".txt");
}

struct PgmExtrema {
    double min, max;
};

inline PgmExtrema read_pgm_sidecar(const std::filesystem::path& pgm_path)
{
    const std::filesystem::path p(pgm_path.string() + ".txt");
    auto is = csv::open_for_read(p);
    std::string key_min, key_max, vmin, vmax;
    if (!(is >> key_min >> vmin >> key_max >> vmax) || key_min != "min" || key_max != "max")
        throw IoError(p.string() + ": malformed extrema file");
    return {csv::parse_double(vmin, p.string()), csv::parse_double(vmax, p.string())};
}

/// Writes `<stem>.csv`, `<stem>.pgm` and `<stem>.pgm.txt`.
inline void export_map(const Subdomain& domain, const RVector& values, const std::filesystem::path& stem)
{
    const MapData m = map_of(domain, values);
    write_map_csv(m, stem.string() + ".csv");
    write_map_pgm(m, stem.string() + ".pgm");
}

/// Writes the permittivity and conductivity contrasts as `<stem>_delta_eps.*`
/// and `<stem>_delta_sigma.*`.
inline void export_map(const Subdomain& domain, const ContrastMap& c, const std::filesystem::path& stem)
{
    export_map(domain, c.delta_eps, stem.string() + "_delta_eps");
    export_map(domain, c.delta_sigma, stem.string() + "_delta_sigma");
}

inline ContrastMap read_contrast_maps(const std::filesystem::path& stem)
{
    const auto eps = read_map_csv(stem.string() + "_delta_eps.csv");
    const auto sigma = read_map_csv(stem.string() + "_delta_sigma.csv");
    if (eps.nx != sigma.nx || eps.ny != sigma.ny) throw IoError(stem.string() + ": contrast maps differ in size");
    return ContrastMap(eps.values, sigma.values);
}

inline void write_landscape_csv(const Landscape& l, const std::filesystem::path& path)
{
    auto os = csv::open_for_write(path);
    os << "beta1\\beta2";
    for (double b : l.beta2) os << ',' << csv::format(b);
    os << '\n';
    for (std::size_t r = 0; r < l.beta1.size(); ++r) {
        os << csv::format(l.beta1[r]);
        for (std::size_t c = 0; c < l.beta2.size(); ++c)
            os << ',' << csv::format(l.log10_cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        os << '\n';
    }
    if (!os) throw IoError("failed writing " + path.string());
}

inline Landscape read_landscape_csv(const std::filesystem::path& path)
{
    auto is = csv::open_for_read(path);
    const std::string ctx = path.string();
    std::string line;
    if (!std::getline(is, line)) throw IoError(ctx + ": empty landscape file");
    auto head = csv::split(line);
    if (head.empty() || head[0] != "beta1\\beta2") throw IoError(ctx + ": unexpected landscape header");
    Landscape l;
    for (std::size_t k = 1; k < head.size(); ++k) l.beta2.push_back(csv::parse_double(head[k], ctx));
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != head.size()) throw IoError(ctx + ": malformed landscape row");
        l.beta1.push_back(csv::parse_double(f[0], ctx));
        std::vector<double> row;
        for (std::size_t k = 1; k < f.size(); ++k) row.push_back(csv::parse_double(f[k], ctx));
        rows.push_back(std::move(row));
    }
    l.log10_cost.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(l.beta2.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            l.log10_cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return l;
}

inline constexpr const char* solution_csv_header = "kind,src_index,freq_index,cell,re,im";

/// Contrast rows use src_index -1.
inline void write_solution_csv(const SolutionPoint& x, const std::filesystem::path& path)
{
    auto os = csv::open_for_write(path);
    os << solution_csv_header << '\n';
    for (std::size_t i = 0; i < x.chi.size(); ++i)
        for (Eigen::Index k = 0; k < x.chi[i].size(); ++k)
            os << "chi,-1," << i << ',' << k << ',' << csv::format(x.chi[i][k].real()) << ','
               << csv::format(x.chi[i][k].imag()) << '\n';
    for (std::size_t p = 0; p < x.e_tot.size(); ++p)
        for (std::size_t i = 0; i < x.e_tot[p].size(); ++i)
            for (Eigen::Index k = 0; k < x.e_tot[p][i].size(); ++k)
                os << "e_tot," << p << ',' << i << ',' << k << ',' << csv::format(x.e_tot[p][i][k].real()) << ','
                   << csv::format(x.e_tot[p][i][k].imag()) << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

inline SolutionPoint read_solution_csv(const std::filesystem::path& path, std::size_t P, std::size_t I, Eigen::Index n)
{
    auto is = csv::open_for_read(path);
    const std::string ctx = path.string();
    std::string line;
    if (!std::getline(is, line) || csv::split(line) != csv::split(solution_csv_header))
        throw IoError(ctx + ": unexpected solution header");
    SolutionPoint x;
    x.chi.assign(I, CVector::Zero(n));
    x.e_tot = make_table<CVector>(P, I, CVector::Zero(n));
    std::vector<char> seen((P + 1) * I * static_cast<std::size_t>(n), 0);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 6) throw IoError(ctx + ": malformed row '" + line + "'");
        const long p = csv::parse_int(f[1], ctx), i = csv::parse_int(f[2], ctx), k = csv::parse_int(f[3], ctx);
        const Complex v(csv::parse_double(f[4], ctx), csv::parse_double(f[5], ctx));
        if (i < 0 || static_cast<std::size_t>(i) >= I || k < 0 || k >= n) throw IoError(ctx + ": index out of range");
        std::size_t slot;
        if (f[0] == "chi" && p == -1) {
            x.chi[static_cast<std::size_t>(i)][k] = v;
            slot = 0;
        } else if (f[0] == "e_tot" && p >= 0 && static_cast<std::size_t>(p) < P) {
            x.e_tot[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)][k] = v;
            slot = static_cast<std::size_t>(p) + 1;
        } else {
            throw IoError(ctx + ": bad row '" + line + "'");
        }
        seen[(slot * I + static_cast<std::size_t>(i)) * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = 1;
    }
    for (char s : seen)
        if (!s) throw IoError(ctx + ": incomplete solution state");
    return x;
}

} // namespace ccsi
