#pragma once

// Self-checks run by the command-line tool: forward solver against the
// cylinder series solution, adjoint identities, and gradients against
// central finite differences.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ccsi/csi.hpp"
#include "ccsi/oracles/mie.hpp"
#include "ccsi/phantom.hpp"

namespace ccsi {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    [[nodiscard]] bool passed() const { return std::isfinite(value) && value < tolerance; }
};

/// Relative RMS difference between the simulated scattered field of a
/// dielectric cylinder (eps_r 3, radius 0.2 m, 0.3 GHz) and its series
/// solution at the receivers of `cfg`, on a grid with 30 cells per internal
/// wavelength.
inline CheckResult check_cylinder_scattering(const MeasurementConfig& cfg, double cells_per_wavelength = 30.0,
                                             int pml_cells = 10)
{
    const double f = 0.3e9, omega = angular_frequency(f);
    const oracles::CylinderScatterer cyl{};
    const double dx = speed_of_light / f / std::sqrt(cyl.eps_r) / cells_per_wavelength;
    const Grid g = make_centered_grid(cfg.radius_m + 0.3, dx, pml_cells);
    const Subdomain dom = Subdomain::centered_square(g, cyl.radius + 2.0 * dx);
    const ContrastMap obj = make_cylinder_phantom(dom, Point{cyl.center_x, cyl.center_y}, cyl.radius, cyl.eps_r - 1.0, 0.0, 4);
    const auto background = assemble_tm(g, omega);
    const auto medium = assemble_tm_with_contrast(g, omega, dom.extend(chi_at_frequency(obj, omega)));
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < cfg.sources(); ++p) {
        const Point s = cfg.source_position(p);
        const CVector src = point_source(g, s);
        const ReceiverOperator rx(g, cfg.receiver_positions(p));
        const CVector ys = rx.sample(CVector(medium->solve(src) - background->solve(src)));
        for (std::size_t q = 0; q < rx.size(); ++q) {
            const Point r = rx.positions()[q];
            const Complex ref = oracles::cylinder_scattered_field(cyl, wavenumber(omega), s.x, s.y, r.x, r.y);
            num += std::norm(ys[static_cast<Eigen::Index>(q)] - ref);
            den += std::norm(ref);
        }
    }
    return {"cylinder scattering vs series solution (relative RMS)", std::sqrt(num / den), 0.02};
}

inline CVector random_cvector(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss;
    CVector v(n);
    for (auto& x : v) x = Complex(gauss(rng), gauss(rng));
    return v;
}

/// Largest relative mismatch of <A^{-1}s, v> = <s, A^{-H}v> and
/// <Phi x, y> = <x, Phi^H y> over `probes` random pairs each.
inline std::pair<CheckResult, CheckResult> check_adjoints(const InversionProblem& prob, int probes, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(prob.domain.grid().cell_count());
    const auto nd = static_cast<Eigen::Index>(prob.domain.size());
    double worst_a = 0.0, worst_phi = 0.0;
    for (int k = 0; k < probes; ++k) {
        const std::size_t i = static_cast<std::size_t>(k) % prob.frequencies();
        const std::size_t p = static_cast<std::size_t>(k) % prob.sources();
        const auto& op = *prob.operators[i];
        const CVector s = random_cvector(n, rng), v = random_cvector(n, rng);
        const Complex lhs = v.dot(op.solve(s));          // <A^{-1}s, v> = v^H A^{-1} s
        const Complex rhs = op.solve_adjoint(v).dot(s);  // <s, A^{-H}v>
        worst_a = std::max(worst_a, std::abs(lhs - rhs) / std::abs(lhs));
        const CVector x = random_cvector(nd, rng);
        const CVector y = random_cvector(static_cast<Eigen::Index>(prob.receivers[p].size()), rng);
        const Complex l2 = y.dot(propagate(prob, p, i, x).data);
        const Complex r2 = back_propagate(prob, p, i, y).dot(x);
        worst_phi = std::max(worst_phi, std::abs(l2 - r2) / std::abs(l2));
    }
    return {{"operator adjoint identity (max relative error)", worst_a, 1e-10},
            {"data-map adjoint identity (max relative error)", worst_phi, 1e-10}};
}

/// A two-frequency problem on a 16 x 16 domain holding a lossy cylinder,
/// with synthetic data from a twice finer grid.
inline InversionProblem small_test_problem(int threads = 1)
{
    MeasurementConfig cfg;
    cfg.source_angles_deg = {0, 90, 180, 270};
    for (int a = 60; a <= 300; a += 20) cfg.receiver_relative_angles_deg.push_back(a);
    cfg.radius_m = 1.0;
    cfg.frequencies_hz = {0.3e9, 0.5e9};
    const Grid g = make_centered_grid(1.3, 0.05, 10);
    const Subdomain d = Subdomain::centered_square(g, 0.4);
    const Grid gs = make_centered_grid(1.3, 0.025, 10);
    const Subdomain ds = Subdomain::centered_square(gs, 0.4);
    const auto phantom = make_cylinder_phantom(ds, Point{0.1, 0.0}, 0.2, 1.0, 5e-3, 4);
    SynthesisOptions so;
    so.inversion_cell = g.dx;
    so.threads = threads;
    const auto ms = synthesize(cfg, phantom, ds, so);
    auto inc = make_table<CVector>(cfg.sources(), cfg.frequencies());
    for (std::size_t p = 0; p < cfg.sources(); ++p)
        for (std::size_t i = 0; i < cfg.frequencies(); ++i)
            inc[p][i] = d.restrict_field(incident_field_line_source(g, cfg.source_position(p), cfg.omega(i)));
    return make_problem(cfg, d, ms.scattered, inc, {}, threads);
}

/// Central difference of f along one direction with step h, relative to the
/// analytic directional derivative.
template <class F>
double fd_relative_error(F&& f, double h, double analytic)
{
    const double fd = (f(h) - f(-h)) / (2.0 * h);
    return std::abs(fd - analytic) / std::abs(analytic);
}

/// Both gradients of one state checked along random directions.
inline std::pair<CheckResult, CheckResult> check_gradients(const InversionProblem& prob, const InversionState& s,
                                                           Variant v, std::uint64_t seed, int directions = 3)
{
    std::mt19937_64 rng(seed);
    double worst_j = 0.0, worst_chi = 0.0;
    for (int d = 0; d < directions; ++d) {
        const std::size_t p = static_cast<std::size_t>(d) % prob.sources();
        const std::size_t i = static_cast<std::size_t>(d) % prob.frequencies();
        const CVector g = grad_j(s, prob, p, i, v);
        const CVector dir = random_cvector(g.size(), rng);
        const double h = 1e-6 * s.j[p][i].norm() / dir.norm();
        auto cost_j = [&](double t) {
            InversionState x = s;
            x.j[p][i] += t * dir;
            residuals(x, prob);
            return cost_half(x, v);
        };
        worst_j = std::max(worst_j, fd_relative_error(cost_j, h, g.dot(dir).real()));

        const auto gc = grad_chi(s, prob, v);
        std::normal_distribution<double> gauss;
        RVector dre(gc.d_re.size()), dim(gc.d_im.size());
        for (auto& x : dre) x = gauss(rng);
        for (auto& x : dim) x = gauss(rng);
        const CVector chi1 = chi_at_frequency(s.master, prob.omega1());
        const double hc = 1e-6 * chi1.norm() / std::sqrt(dre.squaredNorm() + dim.squaredNorm());
        auto cost_chi = [&](double t) {
            InversionState x = s;
            CVector c = chi1;
            for (Eigen::Index k = 0; k < c.size(); ++k) c[k] += t * Complex(dre[k], dim[k]);
            x.master = master_from_chi(c, prob.omega1());
            refresh_chi(x, prob);
            for (std::size_t q = 0; q < prob.sources(); ++q)
                for (std::size_t f = 0; f < prob.frequencies(); ++f) {
                    const CVector w = x.chi[f].cwiseProduct(x.e_tot[q][f]);
                    x.gamma[q][f] = w - x.j[q][f];
                    x.xi[q][f] = prob.data[q][f] - propagate(prob, q, f, w).data;
                }
            return cost_full(x, v);
        };
        worst_chi = std::max(worst_chi, fd_relative_error(cost_chi, hc, gc.d_re.dot(dre) + gc.d_im.dot(dim)));
    }
    return {{std::string("source gradient vs finite differences (") + to_string(v) + ")", worst_j, 1e-5},
            {std::string("contrast gradient vs finite differences (") + to_string(v) + ")", worst_chi, 1e-5}};
}

} // namespace ccsi
