#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ccsi/contrast.hpp"
#include "ccsi/phantom.hpp"

using namespace ccsi;

namespace {

// Grid whose cell centres sit on multiples of 0.05 m.
Grid aligned_grid()
{
    Grid g;
    g.nx = g.ny = 80;
    g.dx = g.dy = 0.05;
    g.origin_x = g.origin_y = -2.0;
    g.pml_cells = 5;
    return g;
}

double pixel_area(const ContrastMap& c, const Grid& g)
{
    double n = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) n += c.delta_eps[k] > 0.0 ? 1.0 : 0.0;
    return n * g.dx * g.dy;
}

} // namespace

TEST(Grid, CenteredGridTilesBoxExactly)
{
    const Grid g = make_centered_grid(1.2, 0.06, 10);
    EXPECT_EQ(g.nx % 2, 0);
    EXPECT_EQ(g.nx, 2 * (20 + 10));
    // centre of the first interior cell is half a cell inside -1.2
    EXPECT_NEAR(g.x(g.pml_cells), -1.2 + 0.03, 1e-12);
    const Subdomain d = Subdomain::centered_square(g, 1.2);
    EXPECT_EQ(d.size(), 40u * 40u);
    EXPECT_TRUE(d.is_box());
    const auto [lo, hi] = d.extent();
    EXPECT_NEAR(lo.x, -1.17, 1e-12);
    EXPECT_NEAR(hi.y, 1.17, 1e-12);
}

TEST(Grid, IndexRoundTrip)
{
    const Grid g = make_centered_grid(1.0, 0.1, 3);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const int k = g.index(ix, iy);
            EXPECT_EQ(g.ix_of(k), ix);
            EXPECT_EQ(g.iy_of(k), iy);
        }
}

TEST(Grid, ValidationAggregatesProblems)
{
    Grid g;
    g.nx = 4;
    g.ny = 4;
    g.dx = -1.0;
    g.dy = 0.1;
    g.pml_cells = 3;
    try {
        g.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("positive"), std::string::npos);
        EXPECT_NE(msg.find("8 cells"), std::string::npos);
        EXPECT_NE(msg.find("PML"), std::string::npos);
    }
}

TEST(Subdomain, RejectsDuplicateAndPmlCells)
{
    const Grid g = make_centered_grid(1.0, 0.1, 3);
    EXPECT_THROW(Subdomain(g, {40, 40}), ConfigError);
    EXPECT_THROW(Subdomain(g, {0}), ConfigError);
    EXPECT_THROW(Subdomain(g, {-1}), ConfigError);
}

TEST(Subdomain, RestrictExtendRoundTrip)
{
    const Grid g = make_centered_grid(1.0, 0.1, 3);
    const Subdomain d = Subdomain::centered_square(g, 0.5);
    CVector local(static_cast<Eigen::Index>(d.size()));
    for (Eigen::Index k = 0; k < local.size(); ++k) local[k] = Complex(static_cast<double>(k), -1.0);
    const CVector full = d.extend(local);
    EXPECT_EQ(full.size(), static_cast<Eigen::Index>(g.cell_count()));
    EXPECT_EQ(d.restrict_field(full), local);
    EXPECT_DOUBLE_EQ(full.squaredNorm(), local.squaredNorm());
}

TEST(Contrast, ZeroConductivityIsReal)
{
    ContrastMap c(3);
    c.delta_eps.setConstant(2.0);
    for (double w : {1e6, 2e9, 7.5e10}) {
        const CVector chi = chi_at_frequency(c, w);
        for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(chi[k], Complex(2.0, 0.0));
    }
}

TEST(Contrast, LossyValueAtThreeHundredMegahertz)
{
    ContrastMap c(1);
    c.delta_eps[0] = 2.0;
    c.delta_sigma[0] = 0.005;
    const double w = 2.0 * std::numbers::pi * 3e8;
    const Complex chi = chi_at_frequency(c, w)[0];
    EXPECT_EQ(chi.real(), 2.0);
    EXPECT_NEAR(chi.imag(), -0.005 / w, 1e-25);
    EXPECT_NEAR(chi.imag(), -2.6526e-12, 1e-16);
}

TEST(Contrast, FrequencyScalingIsStructural)
{
    ContrastMap c(4);
    c.delta_eps << 0.0, 1.0, 2.5, 9.0;
    c.delta_sigma << 0.0, 1e-3, 5e-3, 2e-2;
    const double w1 = 6.3e8, w2 = 2.9e9;
    const CVector a = chi_at_frequency(c, w1), b = chi_at_frequency(c, w2);
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_EQ(a[k].real(), b[k].real());
        EXPECT_NEAR(a[k].imag() * w1, b[k].imag() * w2, 1e-15 * std::abs(c.delta_sigma[k]) + 1e-300);
    }
}

TEST(Contrast, LinearInParts)
{
    ContrastMap a(2), b(2);
    a.delta_eps << 1.0, 2.0;
    a.delta_sigma << 3e-3, 0.0;
    b.delta_eps << -0.5, 4.0;
    b.delta_sigma << 1e-3, 2e-3;
    const double w = 1e9;
    ContrastMap s(RVector(2.0 * a.delta_eps + 3.0 * b.delta_eps), RVector(2.0 * a.delta_sigma + 3.0 * b.delta_sigma));
    const CVector lhs = chi_at_frequency(s, w);
    const CVector rhs = 2.0 * chi_at_frequency(a, w) + 3.0 * chi_at_frequency(b, w);
    EXPECT_LT((lhs - rhs).norm(), 1e-14 * rhs.norm());
}

TEST(Contrast, NonPositiveOmegaRejected)
{
    EXPECT_THROW(chi_at_frequency(ContrastMap(1), 0.0), std::invalid_argument);
    EXPECT_THROW(chi_at_frequency(ContrastMap(1), -5.0), std::invalid_argument);
}

TEST(Contrast, MasterFromParts)
{
    RVector re(1), im(1);
    re[0] = 1.0;
    im[0] = 0.0;
    auto m = master_from_parts(re, im, 1e9);
    EXPECT_EQ(m.delta_eps[0], 1.0);
    EXPECT_EQ(m.delta_sigma[0], 0.0);
    re[0] = 0.0;
    im[0] = -1e-9;
    m = master_from_parts(re, im, 1e9);
    EXPECT_EQ(m.delta_eps[0], 0.0);
    EXPECT_DOUBLE_EQ(m.delta_sigma[0], 1.0);
    EXPECT_THROW(master_from_parts(RVector(2), RVector(3), 1e9), std::invalid_argument);
}

TEST(Contrast, RoundTripThroughLowestFrequency)
{
    ContrastMap c(3);
    c.delta_eps << 0.0, 2.0, 9.0;
    c.delta_sigma << 0.0, 0.005, 0.01;
    const double w1 = 2.0 * std::numbers::pi * 1e8;
    const ContrastMap back = master_from_chi(chi_at_frequency(c, w1), w1);
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_EQ(back.delta_eps[k], c.delta_eps[k]);
        EXPECT_NEAR(back.delta_sigma[k], c.delta_sigma[k], 1e-18);
    }
}

TEST(Contrast, ProjectionClampsNegatives)
{
    ContrastMap c(3);
    c.delta_eps << -1.0, 0.5, 0.0;
    c.delta_sigma << 0.2, -3.0, 0.0;
    project_nonnegative(c);
    EXPECT_EQ(c.delta_eps, (RVector(3) << 0.0, 0.5, 0.0).finished());
    EXPECT_EQ(c.delta_sigma, (RVector(3) << 0.2, 0.0, 0.0).finished());
}

TEST(Contrast, RescaleMatchesChiAtFrequency)
{
    ContrastMap c(2);
    c.delta_eps << 1.5, 0.0;
    c.delta_sigma << 4e-3, 1e-2;
    const double w1 = 1e9, w = 3.7e9;
    const CVector r = rescale_to_frequency(chi_at_frequency(c, w1), w1, w);
    const CVector d = chi_at_frequency(c, w);
    EXPECT_LT((r - d).norm(), 1e-15 * d.norm());
}

TEST(Phantom, CellValues)
{
    const Grid g = aligned_grid();
    const Subdomain d = Subdomain::box(g, -1.2, 1.2, -1.2, 1.2);
    const ContrastMap c = make_austria_phantom(d, 2.0, 0.005);
    int checked = 0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const Point p = d.center(k);
        if (std::abs(p.x - 0.3) < 1e-9 && std::abs(p.y - 0.6) < 1e-9) {
            EXPECT_EQ(c.delta_eps[static_cast<Eigen::Index>(k)], 2.0);
            EXPECT_EQ(c.delta_sigma[static_cast<Eigen::Index>(k)], 0.005);
            ++checked;
        }
        if (std::abs(p.x) < 1e-9 && std::abs(p.y + 0.2) < 1e-9) {
            EXPECT_EQ(c.delta_eps[static_cast<Eigen::Index>(k)], 0.0);
            EXPECT_EQ(c.delta_sigma[static_cast<Eigen::Index>(k)], 0.0);
            ++checked;
        }
    }
    EXPECT_EQ(checked, 2);
}

TEST(Phantom, RingAreaMatchesAnnulus)
{
    const Grid g = make_centered_grid(1.3, 0.03, 4);
    const Subdomain d = Subdomain::centered_square(g, 1.2);
    ContrastMap c(static_cast<Eigen::Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k)
        if (austria::in_ring(d.center(k).x, d.center(k).y)) c.delta_eps[static_cast<Eigen::Index>(k)] = 1.0;
    const double annulus = std::numbers::pi * (0.6 * 0.6 - 0.3 * 0.3);
    EXPECT_NEAR(annulus, 0.8482, 1e-4);
    EXPECT_NEAR(pixel_area(c, g), annulus, 0.02 * annulus);
}

TEST(Phantom, RasterAreaConvergesUnderRefinement)
{
    for (auto shape : {&austria::in_left_disk, &austria::in_right_disk, &austria::in_ring}) {
        double previous = 0.0;
        for (double dx : {0.02, 0.01}) {
            const Grid g = make_centered_grid(1.3, dx, 4);
            const Subdomain d = Subdomain::centered_square(g, 1.2);
            double area = 0.0;
            for (std::size_t k = 0; k < d.size(); ++k)
                if (shape(d.center(k).x, d.center(k).y)) area += dx * dx;
            if (previous > 0.0) EXPECT_LT(std::abs(area - previous) / previous, 0.01);
            previous = area;
        }
    }
}

TEST(Phantom, RejectsTooSmallDomain)
{
    const Grid g = make_centered_grid(1.3, 0.05, 4);
    EXPECT_THROW(make_austria_phantom(Subdomain::centered_square(g, 0.5), 2.0, 0.005), ConfigError);
}

TEST(Phantom, CylinderSupersamplingApproachesDiskArea)
{
    const Grid g = make_centered_grid(0.6, 0.04, 4);
    const Subdomain d = Subdomain::centered_square(g, 0.4);
    const auto c = make_cylinder_phantom(d, Point{0.01, -0.02}, 0.2, 1.0, 0.0, 8);
    const double area = c.delta_eps.sum() * g.dx * g.dy;
    EXPECT_NEAR(area, std::numbers::pi * 0.04, 0.005 * std::numbers::pi * 0.04);
}
