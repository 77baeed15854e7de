#pragma once

// Multi-frequency contrast source inversion with the cross-correlated error
// term (variant cc) and the plain two-term baseline (variant plain).
//
// Notation on the inversion domain D for source p and frequency i:
//   K v   = R A_i^{-1} E v          field on D radiated by a source on D
//   Phi v = M_p A_i^{-1} E v        the same field sampled at the receivers
//   rho   = y - Phi j               data error
//   gamma = chi e_inc + chi K j - j state error
//   xi    = y - Phi(chi e_inc + chi K j)   cross-correlated error
// The contrast is kept as the frequency-independent pair (delta_eps,
// delta_sigma); chi_i is its image at omega_i. Contrast updates are expressed
// at the lowest frequency omega_1.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ccsi/brent.hpp"
#include "ccsi/contrast.hpp"
#include "ccsi/fdfd.hpp"
#include "ccsi/parallel.hpp"
#include "ccsi/scenario.hpp"

namespace ccsi {

enum class Variant { cc, plain };

/// Weight of every cross-correlated term: 1 for cc, 0 for plain.
inline double cross_weight(Variant v) { return v == Variant::cc ? 1.0 : 0.0; }

inline const char* to_string(Variant v) { return v == Variant::cc ? "cc" : "plain"; }

/// Everything the inversion needs that does not change between iterations.
struct InversionProblem {
    Subdomain domain;
    std::vector<double> omegas;                                      // [i], increasing
    std::vector<std::shared_ptr<const FrequencyOperator>> operators; // [i]
    std::vector<ReceiverOperator> receivers;                         // [p]
    SourceFreqTable<CVector> data;                                   // y[p][i]
    SourceFreqTable<CVector> incident;                               // e_inc[p][i] on D

    [[nodiscard]] std::size_t sources() const { return receivers.size(); }
    [[nodiscard]] std::size_t frequencies() const { return omegas.size(); }
    [[nodiscard]] double omega1() const { return omegas.front(); }

    void validate() const
    {
        const std::size_t P = sources(), I = frequencies();
        if (P == 0 || I == 0) throw std::invalid_argument("InversionProblem: no sources or frequencies");
        if (operators.size() != I) throw std::invalid_argument("InversionProblem: one operator per frequency required");
        for (std::size_t i = 1; i < I; ++i)
            if (!(omegas[i] > omegas[i - 1])) throw std::invalid_argument("InversionProblem: frequencies must increase");
        if (data.size() != P || incident.size() != P) throw std::invalid_argument("InversionProblem: table size mismatch");
        const auto n = static_cast<Eigen::Index>(domain.size());
        for (std::size_t p = 0; p < P; ++p) {
            if (data[p].size() != I || incident[p].size() != I)
                throw std::invalid_argument("InversionProblem: table size mismatch");
            for (std::size_t i = 0; i < I; ++i) {
                if (data[p][i].size() != static_cast<Eigen::Index>(receivers[p].size()))
                    throw std::invalid_argument("InversionProblem: data length does not match receivers");
                if (incident[p][i].size() != n)
                    throw std::invalid_argument("InversionProblem: incident field does not match the domain");
            }
        }
    }
};

/// Assembles one operator per frequency on the domain grid and receiver
/// interpolation per source.
inline InversionProblem make_problem(const MeasurementConfig& cfg, const Subdomain& domain,
                                     SourceFreqTable<CVector> data, SourceFreqTable<CVector> incident,
                                     const FdfdOptions& fdfd = {}, int threads = 1)
{
    cfg.validate();
    InversionProblem prob;
    prob.domain = domain;
    prob.omegas = cfg.omegas();
    prob.operators.resize(cfg.frequencies());
    parallel_for(cfg.frequencies(), threads,
                 [&](std::size_t i) { prob.operators[i] = assemble_tm(domain.grid(), prob.omegas[i], fdfd); });
    for (std::size_t p = 0; p < cfg.sources(); ++p) prob.receivers.emplace_back(domain.grid(), cfg.receiver_positions(p));
    prob.data = std::move(data);
    prob.incident = std::move(incident);
    prob.validate();
    return prob;
}

// ---------------------------------------------------------------------------
// Linear maps on the domain

struct Propagated {
    CVector field; // K v
    CVector data;  // Phi v
};

inline Propagated propagate(const InversionProblem& prob, std::size_t p, std::size_t i, const CVector& v)
{
    const CVector full = prob.operators[i]->solve(prob.domain.extend(v));
    return {prob.domain.restrict_field(full), prob.receivers[p].sample(full)};
}

/// Phi^H y
inline CVector back_propagate(const InversionProblem& prob, std::size_t p, std::size_t i, const CVector& y)
{
    return prob.domain.restrict_field(prob.operators[i]->solve_adjoint(prob.receivers[p].spread(y)));
}

// ---------------------------------------------------------------------------
// State

struct InversionState {
    SourceFreqTable<CVector> j;     // contrast sources
    SourceFreqTable<CVector> e_tot; // total fields on D
    ContrastMap master;
    std::vector<CVector> chi; // image of master at each frequency
    SourceFreqTable<CVector> rho, gamma, xi;
    std::vector<double> eta_s, eta_d;
    SourceFreqTable<CVector> g_prev, nu_prev;
    CVector g_chi_prev, nu_chi_prev;
    int iteration = 0;
    std::vector<std::string> warnings;
};

inline void refresh_chi(InversionState& s, const InversionProblem& prob)
{
    s.chi.resize(prob.frequencies());
    for (std::size_t i = 0; i < prob.frequencies(); ++i) s.chi[i] = chi_at_frequency(s.master, prob.omegas[i]);
}

struct Normalization {
    std::vector<double> eta_s; // 1 / sum_p |y|^2
    std::vector<double> eta_d; // 1 / sum_p |chi e_inc|^2
};

inline Normalization compute_eta(const std::vector<CVector>& chi, const InversionProblem& prob)
{
    Normalization n;
    for (std::size_t i = 0; i < prob.frequencies(); ++i) {
        double ys = 0.0, ds = 0.0;
        for (std::size_t p = 0; p < prob.sources(); ++p) {
            ys += prob.data[p][i].squaredNorm();
            ds += chi[i].cwiseProduct(prob.incident[p][i]).squaredNorm();
        }
        if (!(ys > 0.0)) throw NumericalError("compute_eta: data vanish at frequency index " + std::to_string(i));
        if (!(ds > 0.0))
            throw NumericalError("compute_eta: contrast times incident field vanishes at frequency index " +
                                 std::to_string(i) + " (degenerate state)");
        n.eta_s.push_back(1.0 / ys);
        n.eta_d.push_back(1.0 / ds);
    }
    return n;
}

struct Residuals {
    CVector rho, gamma, xi;
};

/// Residuals for one (p, i) evaluated from scratch (two solves).
inline Residuals residuals_for(const InversionProblem& prob, std::size_t p, std::size_t i, const CVector& chi,
                               const CVector& j)
{
    const auto u = propagate(prob, p, i, j);
    const CVector w = chi.cwiseProduct(prob.incident[p][i] + u.field);
    Residuals r;
    r.rho = prob.data[p][i] - u.data;
    r.gamma = w - j;
    r.xi = prob.data[p][i] - propagate(prob, p, i, w).data;
    return r;
}

/// Recomputes rho, gamma, xi and the total fields of every (p, i) from the
/// current contrast sources and contrast.
inline void residuals(InversionState& s, const InversionProblem& prob, int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    s.rho = s.gamma = s.xi = s.e_tot = make_table<CVector>(P, I);
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        const auto u = propagate(prob, p, i, s.j[p][i]);
        s.e_tot[p][i] = prob.incident[p][i] + u.field;
        const CVector w = s.chi[i].cwiseProduct(s.e_tot[p][i]);
        s.rho[p][i] = prob.data[p][i] - u.data;
        s.gamma[p][i] = w - s.j[p][i];
        s.xi[p][i] = prob.data[p][i] - propagate(prob, p, i, w).data;
    });
}

/// Source-update cost: eta_s |rho|^2 + eta_d |gamma|^2 + eta_s |xi|^2 summed
/// over (p, i); plain drops the xi sum.
inline double cost_half(const InversionState& s, Variant v)
{
    const double wx = cross_weight(v);
    double c = 0.0;
    for (std::size_t p = 0; p < s.rho.size(); ++p) {
        for (std::size_t i = 0; i < s.rho[p].size(); ++i) {
            c += s.eta_s[i] * s.rho[p][i].squaredNorm() + s.eta_d[i] * s.gamma[p][i].squaredNorm();
            if (wx != 0.0) c += wx * s.eta_s[i] * s.xi[p][i].squaredNorm();
        }
    }
    return c;
}

/// Contrast-update cost: eta_d |gamma|^2 + eta_s |xi|^2 (plain: first sum only).
inline double cost_full(const InversionState& s, Variant v)
{
    const double wx = cross_weight(v);
    double c = 0.0;
    for (std::size_t p = 0; p < s.gamma.size(); ++p) {
        for (std::size_t i = 0; i < s.gamma[p].size(); ++i) {
            c += s.eta_d[i] * s.gamma[p][i].squaredNorm();
            if (wx != 0.0) c += wx * s.eta_s[i] * s.xi[p][i].squaredNorm();
        }
    }
    return c;
}

/// Gradient of cost_half with respect to j[p][i]; d cost = Re<g, dj>.
inline CVector grad_j(const InversionState& s, const InversionProblem& prob, std::size_t p, std::size_t i, Variant v)
{
    const double wx = cross_weight(v);
    const double es = s.eta_s[i], ed = s.eta_d[i];
    const CVector chi_conj = s.chi[i].conjugate();
    CVector local = ed * chi_conj.cwiseProduct(s.gamma[p][i]);
    if (wx != 0.0) local -= wx * es * chi_conj.cwiseProduct(back_propagate(prob, p, i, s.xi[p][i]));
    const CVector rhs = prob.domain.extend(local) - es * prob.receivers[p].spread(s.rho[p][i]);
    const CVector z = prob.domain.restrict_field(prob.operators[i]->solve_adjoint(rhs));
    return 2.0 * z - 2.0 * ed * s.gamma[p][i];
}

/// Below this squared norm of the previous gradient the direction restarts
/// from steepest descent.
inline constexpr double pr_restart_threshold = 1e-30;

/// Polak-Ribiere momentum Re sum<g, g - g_prev> / sum |g_prev|^2 over a
/// group of vectors that share one coefficient.
inline double pr_coefficient(std::span<const CVector> g_now, std::span<const CVector> g_prev)
{
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g_now.size(); ++k) {
        if (g_prev[k].size() == 0) continue;
        num += g_now[k].dot(g_now[k] - g_prev[k]).real();
        den += g_prev[k].squaredNorm();
    }
    if (den < pr_restart_threshold) return 0.0;
    return num / den;
}

/// Conjugate-gradient directions nu = g + coeff * nu_prev. Iteration 0 returns
/// zeros; an empty or vanishing previous gradient restarts with nu = g.
inline std::vector<CVector> pr_direction(std::span<const CVector> g_now, std::span<const CVector> g_prev,
                                         std::span<const CVector> nu_prev, int iteration)
{
    std::vector<CVector> nu;
    nu.reserve(g_now.size());
    if (iteration == 0) {
        for (const auto& g : g_now) nu.push_back(CVector::Zero(g.size()));
        return nu;
    }
    const double coeff = g_prev.empty() ? 0.0 : pr_coefficient(g_now, g_prev);
    for (std::size_t k = 0; k < g_now.size(); ++k) {
        if (coeff != 0.0 && k < nu_prev.size() && nu_prev[k].size() == g_now[k].size())
            nu.push_back(g_now[k] + coeff * nu_prev[k]);
        else
            nu.push_back(g_now[k]);
    }
    return nu;
}

/// Closed-form line search along nu for one (p, i) together with the
/// propagated vectors the subsequent update reuses.
struct SourceStep {
    double alpha = 0.0;
    bool skipped = false;
    CVector k_nu;         // K nu
    CVector phi_nu;       // Phi nu
    CVector chi_k_nu;     // chi K nu
    CVector phi_chi_k_nu; // Phi chi K nu
};

inline SourceStep prepare_source_step(const InversionState& s, const InversionProblem& prob, const CVector& g,
                                      const CVector& nu, std::size_t p, std::size_t i, Variant v)
{
    SourceStep st;
    const auto u = propagate(prob, p, i, nu);
    st.k_nu = u.field;
    st.phi_nu = u.data;
    st.chi_k_nu = s.chi[i].cwiseProduct(st.k_nu);
    st.phi_chi_k_nu = propagate(prob, p, i, st.chi_k_nu).data;
    const double a2 = s.eta_s[i] * st.phi_nu.squaredNorm();
    const double b2 = s.eta_d[i] * (nu - st.chi_k_nu).squaredNorm();
    const double c2 = cross_weight(v) * s.eta_s[i] * st.phi_chi_k_nu.squaredNorm();
    const double den = 2.0 * (a2 + b2 + c2);
    if (!(den > 0.0)) {
        st.skipped = true;
        return st;
    }
    st.alpha = -g.dot(nu).real() / den;
    return st;
}

inline double step_alpha(const InversionState& s, const InversionProblem& prob, const CVector& g, const CVector& nu,
                         std::size_t p, std::size_t i, Variant v)
{
    return prepare_source_step(s, prob, g, nu, p, i, v).alpha;
}

/// j += alpha nu, e_tot += alpha K nu, and the residuals follow linearly.
inline void update_sources_and_fields(InversionState& s, const SourceStep& st, const CVector& nu, std::size_t p,
                                      std::size_t i)
{
    const double a = st.alpha;
    if (a == 0.0) return;
    s.j[p][i] += a * nu;
    s.e_tot[p][i] += a * st.k_nu;
    s.rho[p][i] -= a * st.phi_nu;
    s.gamma[p][i] += a * (st.chi_k_nu - nu);
    s.xi[p][i] -= a * st.phi_chi_k_nu;
}

/// Contrast gradient expressed at omega_1.
struct ContrastGradient {
    CVector preconditioned; // complex direction for chi_1
    RVector d_re;           // d cost / d Re chi_1
    RVector d_im;           // d cost / d Im chi_1
    std::size_t zero_denominator_cells = 0;
};

inline ContrastGradient grad_chi(const InversionState& s, const InversionProblem& prob, Variant v, int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    const auto n = static_cast<Eigen::Index>(prob.domain.size());
    const double wx = cross_weight(v);
    // per (p, i) contribution conj(e) (eta_d gamma - eta_s Phi^H xi)
    auto contrib = make_table<CVector>(P, I);
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        CVector r = s.eta_d[i] * s.gamma[p][i];
        if (wx != 0.0) r -= wx * s.eta_s[i] * back_propagate(prob, p, i, s.xi[p][i]);
        contrib[p][i] = s.e_tot[p][i].conjugate().cwiseProduct(r);
    });

    ContrastGradient out;
    CVector sum_re = CVector::Zero(n), sum_im = CVector::Zero(n);
    RVector den_re = RVector::Zero(n), den_im = RVector::Zero(n);
    for (std::size_t i = 0; i < I; ++i) {
        const double r = prob.omega1() / prob.omegas[i];
        CVector gi = CVector::Zero(n);
        RVector power = RVector::Zero(n);
        for (std::size_t p = 0; p < P; ++p) {
            gi += contrib[p][i];
            power += s.e_tot[p][i].cwiseAbs2();
        }
        sum_re += gi;
        sum_im += r * gi;
        den_re += power;
        den_im += r * r * power;
    }
    out.d_re = 2.0 * sum_re.real();
    out.d_im = 2.0 * sum_im.imag();
    out.preconditioned = CVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (den_re[k] > 0.0 && den_im[k] > 0.0)
            out.preconditioned[k] = Complex(out.d_re[k] / den_re[k], out.d_im[k] / den_im[k]);
        else
            ++out.zero_denominator_cells;
    }
    return out;
}

/// The contrast line-search objective along a direction at omega_1, reduced
/// to per-frequency quadratic coefficients:
///   f(b) = sum_i N_i(b)/D_i(b) + w * eta_s[i] * X_i(b)
/// with N = sum_p |(chi_i + b nu_i) e - j|^2, D = sum_p |(chi_i + b nu_i) e_inc|^2
/// and X = sum_p |y - Phi (chi_i + b nu_i) e|^2.
struct BetaObjective {
    struct Quadratic {
        double c0 = 0.0, c1 = 0.0, c2 = 0.0;
        [[nodiscard]] double at(double b) const { return c0 + b * (c1 + b * c2); }
    };
    std::vector<Quadratic> num, den, cross;
    std::vector<double> eta_s;
    double weight = 1.0;

    [[nodiscard]] double value(double b, bool freeze_denominators = false) const
    {
        double f = 0.0;
        for (std::size_t i = 0; i < num.size(); ++i) {
            const double d = freeze_denominators ? den[i].c0 : den[i].at(b);
            f += num[i].at(b) / d;
            if (weight != 0.0) f += weight * eta_s[i] * cross[i].at(b);
        }
        return f;
    }

    /// Minimizer of value(b, true), which is exactly quadratic.
    [[nodiscard]] double frozen_minimizer() const
    {
        double a = 0.0, l = 0.0;
        for (std::size_t i = 0; i < num.size(); ++i) {
            a += num[i].c2 / den[i].c0;
            l += num[i].c1 / den[i].c0;
            if (weight != 0.0) {
                a += weight * eta_s[i] * cross[i].c2;
                l += weight * eta_s[i] * cross[i].c1;
            }
        }
        return -l / (2.0 * a);
    }
};

inline BetaObjective make_beta_objective(const InversionState& s, const InversionProblem& prob,
                                         const CVector& nu_chi, Variant v, int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    BetaObjective obj;
    obj.weight = cross_weight(v);
    obj.eta_s = s.eta_s;
    obj.num.resize(I);
    obj.den.resize(I);
    obj.cross.resize(I);
    std::vector<CVector> nu_i(I);
    for (std::size_t i = 0; i < I; ++i) nu_i[i] = rescale_to_frequency(nu_chi, prob.omega1(), prob.omegas[i]);

    auto phi_dir = make_table<CVector>(P, I);
    if (obj.weight != 0.0) {
        parallel_for(P * I, threads, [&](std::size_t k) {
            const std::size_t p = k / I, i = k % I;
            phi_dir[p][i] = propagate(prob, p, i, nu_i[i].cwiseProduct(s.e_tot[p][i])).data;
        });
    }
    for (std::size_t i = 0; i < I; ++i) {
        for (std::size_t p = 0; p < P; ++p) {
            const CVector a = s.chi[i].cwiseProduct(s.e_tot[p][i]) - s.j[p][i];
            const CVector b = nu_i[i].cwiseProduct(s.e_tot[p][i]);
            obj.num[i].c0 += a.squaredNorm();
            obj.num[i].c1 += 2.0 * a.dot(b).real();
            obj.num[i].c2 += b.squaredNorm();
            const CVector ai = s.chi[i].cwiseProduct(prob.incident[p][i]);
            const CVector bi = nu_i[i].cwiseProduct(prob.incident[p][i]);
            obj.den[i].c0 += ai.squaredNorm();
            obj.den[i].c1 += 2.0 * ai.dot(bi).real();
            obj.den[i].c2 += bi.squaredNorm();
            if (obj.weight != 0.0) {
                obj.cross[i].c0 += s.xi[p][i].squaredNorm();
                obj.cross[i].c1 -= 2.0 * s.xi[p][i].dot(phi_dir[p][i]).real();
                obj.cross[i].c2 += phi_dir[p][i].squaredNorm();
            }
        }
    }
    return obj;
}

struct BetaStep {
    double beta = 0.0;
    bool bracket_failed = false;
    double value_at_zero = 0.0;
    double value_at_beta = 0.0;
};

inline BetaStep step_beta(const BetaObjective& obj)
{
    BetaStep out;
    auto f = [&](double b) { return obj.value(b); };
    out.value_at_zero = f(0.0);
    const auto br = bracket_minimum(f, -1.0, 1.0, 40);
    if (!br) {
        out.bracket_failed = true;
        out.value_at_beta = out.value_at_zero;
        return out;
    }
    const auto res = brent_minimize(f, *br, 1e-8);
    out.beta = res.x;
    out.value_at_beta = res.fx;
    return out;
}

inline BetaStep step_beta(const InversionState& s, const InversionProblem& prob, const CVector& nu_chi, Variant v,
                          int threads = 1)
{
    return step_beta(make_beta_objective(s, prob, nu_chi, v, threads));
}

/// chi_1 += beta nu_chi, projection onto delta_eps, delta_sigma >= 0, then
/// the per-frequency contrasts, eta_d, gamma and xi are refreshed.
inline void update_contrast(InversionState& s, const InversionProblem& prob, double beta, const CVector& nu_chi,
                            int threads = 1)
{
    const double w1 = prob.omega1();
    const CVector chi1 = chi_at_frequency(s.master, w1) + beta * nu_chi;
    s.master = master_from_chi(chi1, w1);
    project_nonnegative(s.master);
    refresh_chi(s, prob);
    s.eta_d = compute_eta(s.chi, prob).eta_d;
    const std::size_t P = prob.sources(), I = prob.frequencies();
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        const CVector w = s.chi[i].cwiseProduct(s.e_tot[p][i]);
        s.gamma[p][i] = w - s.j[p][i];
        s.xi[p][i] = prob.data[p][i] - propagate(prob, p, i, w).data;
    });
}

// ---------------------------------------------------------------------------
// Initialization

/// Back-propagated contrast sources with the least-squares scale factor.
inline SourceFreqTable<CVector> init_backpropagation(const InversionProblem& prob, int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    auto j0 = make_table<CVector>(P, I);
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        const CVector b = back_propagate(prob, p, i, prob.data[p][i]);
        const double nb = b.squaredNorm();
        if (nb == 0.0) {
            j0[p][i] = CVector::Zero(b.size());
            return;
        }
        const double den = propagate(prob, p, i, b).data.squaredNorm();
        if (!(den > 0.0))
            throw NumericalError("init_backpropagation: Phi Phi^H y vanishes for source " + std::to_string(p) +
                                 ", frequency index " + std::to_string(i));
        j0[p][i] = (nb / den) * b;
    });
    return j0;
}

struct InitialFields {
    SourceFreqTable<CVector> e_tot;
    ContrastMap master;
};

/// Total fields e_inc + K j0 and the cell-wise least-squares contrast fit at
/// omega_1 (imaginary part weighted by omega_1/omega_i), then projected.
inline InitialFields init_fields_and_contrast(const SourceFreqTable<CVector>& j0, const InversionProblem& prob,
                                              int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    InitialFields out;
    out.e_tot = make_table<CVector>(P, I);
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        out.e_tot[p][i] = prob.incident[p][i] + propagate(prob, p, i, j0[p][i]).field;
    });
    const auto n = static_cast<Eigen::Index>(prob.domain.size());
    CVector num_re = CVector::Zero(n), num_im = CVector::Zero(n);
    RVector den_re = RVector::Zero(n), den_im = RVector::Zero(n);
    for (std::size_t i = 0; i < I; ++i) {
        const double r = prob.omega1() / prob.omegas[i];
        for (std::size_t p = 0; p < P; ++p) {
            const CVector cross = j0[p][i].cwiseProduct(out.e_tot[p][i].conjugate());
            const RVector power = out.e_tot[p][i].cwiseAbs2();
            num_re += cross;
            num_im += r * cross;
            den_re += power;
            den_im += r * r * power;
        }
    }
    CVector chi1 = CVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double re = den_re[k] > 0.0 ? num_re[k].real() / den_re[k] : 0.0;
        const double im = den_im[k] > 0.0 ? num_im[k].imag() / den_im[k] : 0.0;
        chi1[k] = Complex(re, im);
    }
    out.master = master_from_chi(chi1, prob.omega1());
    project_nonnegative(out.master);
    return out;
}

inline InversionState initialize(const InversionProblem& prob, int threads = 1)
{
    InversionState s;
    s.j = init_backpropagation(prob, threads);
    auto init = init_fields_and_contrast(s.j, prob, threads);
    s.master = std::move(init.master);
    refresh_chi(s, prob);
    const auto eta = compute_eta(s.chi, prob);
    s.eta_s = eta.eta_s;
    s.eta_d = eta.eta_d;
    residuals(s, prob, threads);
    s.iteration = 0;
    return s;
}

// ---------------------------------------------------------------------------
// Iteration

/// ||estimate - truth|| / ||truth|| of the complex contrasts at omega_max.
inline double reconstruction_error(const ContrastMap& estimate, const ContrastMap& truth, double omega_max)
{
    if (estimate.size() != truth.size()) throw std::invalid_argument("reconstruction_error: size mismatch");
    const CVector t = chi_at_frequency(truth, omega_max);
    const double nt = t.norm();
    if (!(nt > 0.0)) throw std::domain_error("reconstruction_error: true contrast is zero, error undefined");
    return (chi_at_frequency(estimate, omega_max) - t).norm() / nt;
}

struct IterationRecord {
    int iteration = 0;
    double cost_half = 0.0;
    double cost_full = 0.0;
    double err = std::numeric_limits<double>::quiet_NaN();
    double alpha_mean = 0.0;
    double beta = 0.0;
    /// Largest relative increase of a per-(p,i) cost_half term over one
    /// source update (<= 0 up to rounding for an exact line search).
    double max_source_cost_increase = 0.0;
};

/// Per-(p,i) term of cost_half.
inline double source_cost_term(const InversionState& s, std::size_t p, std::size_t i, Variant v)
{
    return s.eta_s[i] * s.rho[p][i].squaredNorm() + s.eta_d[i] * s.gamma[p][i].squaredNorm() +
           cross_weight(v) * s.eta_s[i] * s.xi[p][i].squaredNorm();
}

/// One full iteration: every contrast source along its conjugate direction,
/// then one contrast update.
inline IterationRecord iterate(InversionState& s, const InversionProblem& prob, Variant v, int threads = 1)
{
    const std::size_t P = prob.sources(), I = prob.frequencies();
    const int ell = ++s.iteration;
    IterationRecord rec;
    rec.iteration = ell;

    // contrast sources
    auto g = make_table<CVector>(P, I);
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        g[p][i] = grad_j(s, prob, p, i, v);
    });
    if (s.g_prev.empty()) s.g_prev = make_table<CVector>(P, I);
    if (s.nu_prev.empty()) s.nu_prev = make_table<CVector>(P, I);
    auto nu = make_table<CVector>(P, I);
    for (std::size_t i = 0; i < I; ++i) {
        std::vector<CVector> gi(P), gpi(P), npi(P);
        for (std::size_t p = 0; p < P; ++p) {
            gi[p] = g[p][i];
            gpi[p] = s.g_prev[p][i];
            npi[p] = s.nu_prev[p][i];
        }
        const auto dirs = pr_direction(gi, gpi, npi, ell);
        for (std::size_t p = 0; p < P; ++p) nu[p][i] = dirs[p];
    }
    std::vector<double> alphas(P * I, 0.0), increase(P * I, 0.0);
    std::vector<char> skipped(P * I, 0);
    parallel_for(P * I, threads, [&](std::size_t k) {
        const std::size_t p = k / I, i = k % I;
        const double before = source_cost_term(s, p, i, v);
        const auto st = prepare_source_step(s, prob, g[p][i], nu[p][i], p, i, v);
        skipped[k] = st.skipped;
        update_sources_and_fields(s, st, nu[p][i], p, i);
        alphas[k] = st.alpha;
        const double after = source_cost_term(s, p, i, v);
        increase[k] = before > 0.0 ? (after - before) / before : after;
    });
    for (std::size_t k = 0; k < P * I; ++k) {
        if (skipped[k]) {
            std::ostringstream os;
            os << "iteration " << ell << ": zero search direction for source " << k / I << ", frequency index "
               << k % I << "; step skipped";
            s.warnings.push_back(os.str());
        }
        rec.alpha_mean += alphas[k];
        rec.max_source_cost_increase = std::max(rec.max_source_cost_increase, increase[k]);
    }
    rec.alpha_mean /= static_cast<double>(P * I);
    s.g_prev = std::move(g);
    s.nu_prev = std::move(nu);

    // contrast
    const auto gc = grad_chi(s, prob, v, threads);
    if (gc.zero_denominator_cells > 0)
        s.warnings.push_back("iteration " + std::to_string(ell) + ": " + std::to_string(gc.zero_denominator_cells) +
                             " cells with vanishing total field; gradient set to zero there");
    const CVector empty;
    std::vector<CVector> gnow{gc.preconditioned};
    std::vector<CVector> gprev, nprev;
    if (s.g_chi_prev.size() > 0) {
        gprev.push_back(s.g_chi_prev);
        nprev.push_back(s.nu_chi_prev);
    }
    CVector nu_chi = pr_direction(gnow, gprev, nprev, ell).front();
    const auto bs = step_beta(s, prob, nu_chi, v, threads);
    if (bs.bracket_failed)
        s.warnings.push_back("iteration " + std::to_string(ell) + ": no bracket for the contrast step; beta = 0");
    update_contrast(s, prob, bs.beta, nu_chi, threads);
    s.g_chi_prev = gc.preconditioned;
    s.nu_chi_prev = std::move(nu_chi);
    rec.beta = bs.beta;
    rec.cost_half = cost_half(s, v);
    rec.cost_full = cost_full(s, v);
    return rec;
}

struct RunOptions {
    Variant variant = Variant::cc;
    int max_iterations = 2048;
    int threads = 1;
    std::optional<ContrastMap> truth; // enables the per-iteration error
    std::function<void(const IterationRecord&)> on_iteration;
};

struct RunResult {
    ContrastMap master;
    std::vector<IterationRecord> log;
    InversionState state;
    std::vector<std::string> warnings;
};

inline RunResult run(const InversionProblem& prob, const RunOptions& opts)
{
    prob.validate();
    RunResult out;
    bool any_data = false;
    for (const auto& row : prob.data)
        for (const auto& y : row) any_data = any_data || y.squaredNorm() > 0.0;
    if (!any_data) {
        out.master = ContrastMap(static_cast<Eigen::Index>(prob.domain.size()));
        out.warnings.emplace_back("no scattered data: the reconstructed contrast is zero");
        return out;
    }
    const double omega_max = prob.omegas.back();
    auto error_of = [&](const ContrastMap& m) {
        return opts.truth ? reconstruction_error(m, *opts.truth, omega_max) : std::numeric_limits<double>::quiet_NaN();
    };

    InversionState s = initialize(prob, opts.threads);
    IterationRecord init;
    init.iteration = 0;
    init.cost_half = cost_half(s, opts.variant);
    init.cost_full = cost_full(s, opts.variant);
    init.err = error_of(s.master);
    out.log.push_back(init);
    if (opts.on_iteration) opts.on_iteration(init);

    for (int it = 0; it < opts.max_iterations; ++it) {
        IterationRecord rec;
        try {
            rec = iterate(s, prob, opts.variant, opts.threads);
        } catch (const NumericalError& e) {
            throw NumericalError("iteration " + std::to_string(s.iteration) + ": " + e.what());
        }
        rec.err = error_of(s.master);
        out.log.push_back(rec);
        if (opts.on_iteration) opts.on_iteration(rec);
    }
    out.master = s.master;
    out.warnings = s.warnings;
    out.state = std::move(s);
    return out;
}

} // namespace ccsi
