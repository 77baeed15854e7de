#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ccsi/grid.hpp"

namespace ccsi {

/// Frequency-independent material contrast on the inversion domain:
/// relative-permittivity contrast and conductivity contrast (S/m).
/// The complex contrast at angular frequency w is delta_eps - i*delta_sigma/w.
struct ContrastMap {
    RVector delta_eps;
    RVector delta_sigma;

    ContrastMap() = default;
    explicit ContrastMap(Eigen::Index n) : delta_eps(RVector::Zero(n)), delta_sigma(RVector::Zero(n)) {}
    ContrastMap(RVector eps, RVector sigma) : delta_eps(std::move(eps)), delta_sigma(std::move(sigma))
    {
        if (delta_eps.size() != delta_sigma.size())
            throw std::invalid_argument("ContrastMap: permittivity and conductivity arrays differ in length");
    }

    [[nodiscard]] Eigen::Index size() const { return delta_eps.size(); }
};

inline CVector chi_at_frequency(const ContrastMap& c, double omega)
{
    if (!(omega > 0.0)) throw std::invalid_argument("chi_at_frequency: omega must be positive");
    CVector chi(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) chi[k] = Complex(c.delta_eps[k], -c.delta_sigma[k] / omega);
    return chi;
}

/// Inverse of chi_at_frequency at the reference frequency omega1.
inline ContrastMap master_from_parts(const RVector& re, const RVector& im_at_omega1, double omega1)
{
    if (re.size() != im_at_omega1.size())
        throw std::invalid_argument("master_from_parts: real and imaginary parts differ in length");
    if (!(omega1 > 0.0)) throw std::invalid_argument("master_from_parts: omega1 must be positive");
    return ContrastMap(re, -omega1 * im_at_omega1);
}

inline ContrastMap master_from_chi(const CVector& chi1, double omega1)
{
    return master_from_parts(chi1.real(), chi1.imag(), omega1);
}

/// Clamp to the passive free-space prior: delta_eps >= 0, delta_sigma >= 0.
inline void project_nonnegative(ContrastMap& c)
{
    c.delta_eps = c.delta_eps.cwiseMax(0.0);
    c.delta_sigma = c.delta_sigma.cwiseMax(0.0);
}

/// Maps a per-frequency direction expressed at omega1 to frequency omega:
/// the real part is shared, the imaginary part scales with omega1/omega.
inline CVector rescale_to_frequency(const CVector& at_omega1, double omega1, double omega)
{
    const double r = omega1 / omega;
    CVector out(at_omega1.size());
    for (Eigen::Index k = 0; k < at_omega1.size(); ++k) out[k] = Complex(at_omega1[k].real(), r * at_omega1[k].imag());
    return out;
}

} // namespace ccsi
