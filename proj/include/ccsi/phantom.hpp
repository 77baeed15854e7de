#pragma once

#include <cmath>
#include <string>

#include "ccsi/contrast.hpp"

namespace ccsi {

// Austria profile: two disks (radius 0.2 m) at (-0.3, 0.6) and (0.3, 0.6),
// one ring centred at (0, -0.2) with radii 0.3 m (inner) and 0.6 m (outer).
namespace austria {
inline constexpr double disk_radius = 0.2;
inline constexpr double disk_x = 0.3;
inline constexpr double disk_y = 0.6;
inline constexpr double ring_x = 0.0;
inline constexpr double ring_y = -0.2;
inline constexpr double ring_inner = 0.3;
inline constexpr double ring_outer = 0.6;

inline bool in_left_disk(double x, double y) { return std::hypot(x + disk_x, y - disk_y) <= disk_radius; }
inline bool in_right_disk(double x, double y) { return std::hypot(x - disk_x, y - disk_y) <= disk_radius; }
inline bool in_ring(double x, double y)
{
    const double r = std::hypot(x - ring_x, y - ring_y);
    return r >= ring_inner && r <= ring_outer;
}
inline bool contains(double x, double y) { return in_left_disk(x, y) || in_right_disk(x, y) || in_ring(x, y); }
} // namespace austria

/// The two material cases of the benchmark.
struct PhantomCase {
    double delta_eps;
    double delta_sigma;
};
inline constexpr PhantomCase austria_case1{2.0, 5e-3};
inline constexpr PhantomCase austria_case2{9.0, 10e-3};

/// Rasterises the Austria profile on the domain by cell-centre membership.
inline ContrastMap make_austria_phantom(const Subdomain& domain, double d_eps, double d_sigma)
{
    const auto [lo, hi] = domain.extent();
    const auto& g = domain.grid();
    // Shapes span x in [-0.6, 0.6], y in [-0.8, 0.8]; cells must reach those edges.
    if (lo.x > -0.6 + 0.5 * g.dx || hi.x < 0.6 - 0.5 * g.dx || lo.y > -0.8 + 0.5 * g.dy || hi.y < 0.8 - 0.5 * g.dy)
        throw ConfigError("make_austria_phantom: inversion domain does not contain the Austria profile");
    ContrastMap c(static_cast<Eigen::Index>(domain.size()));
    for (std::size_t k = 0; k < domain.size(); ++k) {
        const Point p = domain.center(k);
        if (austria::contains(p.x, p.y)) {
            c.delta_eps[static_cast<Eigen::Index>(k)] = d_eps;
            c.delta_sigma[static_cast<Eigen::Index>(k)] = d_sigma;
        }
    }
    return c;
}

/// Homogeneous circular cylinder. With `subsamples` = 1 a cell belongs to the
/// cylinder when its centre does; larger values weight each cell by the
/// fraction of a subsamples x subsamples lattice that falls inside.
inline ContrastMap make_cylinder_phantom(const Subdomain& domain, Point center, double radius, double d_eps,
                                         double d_sigma, int subsamples = 1)
{
    if (subsamples < 1) throw std::invalid_argument("make_cylinder_phantom: subsamples must be >= 1");
    const auto& g = domain.grid();
    ContrastMap c(static_cast<Eigen::Index>(domain.size()));
    for (std::size_t k = 0; k < domain.size(); ++k) {
        const Point p = domain.center(k);
        int inside = 0;
        for (int a = 0; a < subsamples; ++a) {
            for (int b = 0; b < subsamples; ++b) {
                const double x = subsamples == 1 ? p.x : p.x + ((a + 0.5) / subsamples - 0.5) * g.dx;
                const double y = subsamples == 1 ? p.y : p.y + ((b + 0.5) / subsamples - 0.5) * g.dy;
                if (std::hypot(x - center.x, y - center.y) <= radius) ++inside;
            }
        }
        const double fill = static_cast<double>(inside) / (subsamples * subsamples);
        c.delta_eps[static_cast<Eigen::Index>(k)] = fill * d_eps;
        c.delta_sigma[static_cast<Eigen::Index>(k)] = fill * d_sigma;
    }
    return c;
}

} // namespace ccsi
