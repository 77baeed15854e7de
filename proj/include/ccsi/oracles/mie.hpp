#pragma once

// Series solution for TM scattering by a homogeneous lossless circular
// cylinder illuminated by a line source. Used as an analytic reference for
// the FDFD solver; it shares no code with the finite-difference path.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace ccsi::oracles {

namespace detail {

inline double bessel_j(int n, double x)
{
    if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * std::cyl_bessel_j(static_cast<double>(-n), x);
    return std::cyl_bessel_j(static_cast<double>(n), x);
}

inline double bessel_y(int n, double x)
{
    if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * std::cyl_neumann(static_cast<double>(-n), x);
    return std::cyl_neumann(static_cast<double>(n), x);
}

inline std::complex<double> hankel2(int n, double x) { return {bessel_j(n, x), -bessel_y(n, x)}; }
inline double bessel_j_prime(int n, double x) { return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x)); }
inline std::complex<double> hankel2_prime(int n, double x) { return 0.5 * (hankel2(n - 1, x) - hankel2(n + 1, x)); }

} // namespace detail

struct CylinderScatterer {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.2;
    double eps_r = 3.0; // relative permittivity of the (lossless) cylinder
};

/// Scattered E_z at (x, y) outside the cylinder for a line source at
/// (sx, sy) with free-space wavenumber k0. Incident amplitude convention:
/// e_inc = -(i/4) k0^2 H0^(2)(k0 |r - r_s|), time factor exp(+i w t).
inline std::complex<double> cylinder_scattered_field(const CylinderScatterer& cyl, double k0, double sx, double sy,
                                                     double x, double y, int max_order = -1)
{
    const double k1 = k0 * std::sqrt(cyl.eps_r);
    const double a = cyl.radius;
    const double rs = std::hypot(sx - cyl.center_x, sy - cyl.center_y);
    const double phis = std::atan2(sy - cyl.center_y, sx - cyl.center_x);
    const double r = std::hypot(x - cyl.center_x, y - cyl.center_y);
    const double phi = std::atan2(y - cyl.center_y, x - cyl.center_x);
    if (r < a || rs < a) throw std::invalid_argument("cylinder_scattered_field: point inside the cylinder");

    const int nmax = max_order > 0 ? max_order : static_cast<int>(std::ceil(k1 * a)) + 20;
    const std::complex<double> amp(0.0, -0.25 * k0 * k0);
    std::complex<double> sum = 0.0;
    for (int n = 0; n <= nmax; ++n) {
        const double j_out = detail::bessel_j(n, k0 * a);
        const double jp_out = detail::bessel_j_prime(n, k0 * a);
        const double j_in = detail::bessel_j(n, k1 * a);
        const double jp_in = detail::bessel_j_prime(n, k1 * a);
        const std::complex<double> h = detail::hankel2(n, k0 * a);
        const std::complex<double> hp = detail::hankel2_prime(n, k0 * a);
        // Continuity of E_z and dE_z/dr at r = a.
        const std::complex<double> coeff = (k1 * jp_in * j_out - k0 * j_in * jp_out) / (k0 * j_in * hp - k1 * jp_in * h);
        const std::complex<double> term = coeff * detail::hankel2(n, k0 * rs) * detail::hankel2(n, k0 * r);
        sum += (n == 0 ? 1.0 : 2.0) * term * std::cos(n * (phi - phis));
    }
    return amp * sum;
}

} // namespace ccsi::oracles
