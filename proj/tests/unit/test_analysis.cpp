#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "ccsi/analysis.hpp"
#include "ccsi/validation.hpp"

using namespace ccsi;
namespace fs = std::filesystem;

namespace {

SolutionPoint random_point(std::size_t P, std::size_t I, Eigen::Index n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    auto vec = [&] {
        CVector v(n);
        for (auto& x : v) x = Complex(g(rng), g(rng));
        return v;
    };
    SolutionPoint x;
    for (std::size_t i = 0; i < I; ++i) x.chi.push_back(vec());
    x.e_tot = make_table<CVector>(P, I);
    for (auto& row : x.e_tot)
        for (auto& e : row) e = vec();
    return x;
}

fs::path temp_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("ccsi_analysis_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

bool same(const SolutionPoint& a, const SolutionPoint& b)
{
    if (a.chi.size() != b.chi.size() || a.e_tot.size() != b.e_tot.size()) return false;
    for (std::size_t i = 0; i < a.chi.size(); ++i)
        if (a.chi[i] != b.chi[i]) return false;
    for (std::size_t p = 0; p < a.e_tot.size(); ++p)
        for (std::size_t i = 0; i < a.e_tot[p].size(); ++i)
            if (a.e_tot[p][i] != b.e_tot[p][i]) return false;
    return true;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

} // namespace

TEST(Analysis, LandmarksAreExact)
{
    const auto cc = random_point(2, 3, 10, 1), mr = random_point(2, 3, 10, 2), act = random_point(2, 3, 10, 3);
    EXPECT_TRUE(same(sample_solution_space(cc, mr, act, -1.0, 1.0), act));
    EXPECT_TRUE(same(sample_solution_space(cc, mr, act, 0.0, 1.0), cc));
    EXPECT_TRUE(same(sample_solution_space(cc, mr, act, 1.0, 0.0), mr));
}

TEST(Analysis, SamplingIsAffineInEachParameter)
{
    const auto cc = random_point(2, 2, 12, 4), mr = random_point(2, 2, 12, 5), act = random_point(2, 2, 12, 6);
    auto check_mid = [&](double b1a, double b2a, double b1b, double b2b) {
        const auto a = sample_solution_space(cc, mr, act, b1a, b2a);
        const auto b = sample_solution_space(cc, mr, act, b1b, b2b);
        const auto m = sample_solution_space(cc, mr, act, 0.5 * (b1a + b1b), 0.5 * (b2a + b2b));
        for (std::size_t i = 0; i < m.chi.size(); ++i) {
            const CVector mid = 0.5 * (a.chi[i] + b.chi[i]);
            EXPECT_LT((m.chi[i] - mid).norm(), 1e-12 * mid.norm());
        }
        for (std::size_t p = 0; p < m.e_tot.size(); ++p)
            for (std::size_t i = 0; i < m.e_tot[p].size(); ++i) {
                const CVector mid = 0.5 * (a.e_tot[p][i] + b.e_tot[p][i]);
                EXPECT_LT((m.e_tot[p][i] - mid).norm(), 1e-12 * mid.norm());
            }
    };
    check_mid(-1.3, 0.4, 0.9, 0.4);   // beta1 at fixed beta2
    check_mid(0.25, -1.5, 0.25, 1.1); // beta2 at fixed beta1
}

TEST(Analysis, DimensionMismatchIsRejected)
{
    const auto a = random_point(2, 2, 5, 1), b = random_point(2, 2, 6, 2);
    EXPECT_THROW(sample_solution_space(a, a, b, 0.0, 0.0), std::invalid_argument);
}

TEST(Analysis, FastLandscapeMatchesDirectCost)
{
    const auto prob = small_test_problem();
    auto s = initialize(prob);
    for (int k = 0; k < 3; ++k) iterate(s, prob, Variant::cc);
    const SolutionPoint x_cc = solution_from_state(s);
    auto s2 = initialize(prob);
    for (int k = 0; k < 2; ++k) iterate(s2, prob, Variant::plain);
    const SolutionPoint x_mr = solution_from_state(s2);
    const auto truth = make_cylinder_phantom(prob.domain, Point{0.1, 0.0}, 0.2, 1.0, 5e-3, 4);
    const SolutionPoint x_act = actual_solution(prob, truth);

    // the actual solution satisfies the discrete state equation
    for (std::size_t p = 0; p < prob.sources(); ++p)
        for (std::size_t i = 0; i < prob.frequencies(); ++i) {
            const CVector j = x_act.chi[i].cwiseProduct(x_act.e_tot[p][i]);
            const CVector gamma = residuals_for(prob, p, i, x_act.chi[i], j).gamma;
            EXPECT_LT(gamma.norm(), 1e-10 * j.norm());
        }

    const LandscapeEvaluator eval(prob, x_cc, x_mr, x_act);
    for (auto [b1, b2] : {std::pair{-1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}, {0.35, -1.2}, {-1.5, 1.5}}) {
        const double direct = cost_at_point(prob, sample_solution_space(x_cc, x_mr, x_act, b1, b2));
        EXPECT_NEAR(eval.cost(b1, b2), direct, 1e-9 * direct) << b1 << "," << b2;
    }
    // with zero contrast eta_d is undefined
    EXPECT_TRUE(std::isnan(eval.cost(0.0, 0.0)));
}

TEST(Analysis, LandscapeShapeAndFailedCells)
{
    const auto b1 = linspace(-1.5, 1.5, 7), b2 = linspace(-1.5, 1.5, 5);
    const auto l = landscape(
        [](double a, double b) {
            if (a > 1.0) throw NumericalError("boom");
            return 1.0 + (a + 1.0) * (a + 1.0) + (b - 1.0) * (b - 1.0);
        },
        b1, b2, 2);
    EXPECT_EQ(l.log10_cost.rows(), 7);
    EXPECT_EQ(l.log10_cost.cols(), 5);
    EXPECT_TRUE(std::isnan(l.log10_cost(6, 0)));
    const auto [r, c] = l.argmin();
    EXPECT_EQ(l.beta1[static_cast<std::size_t>(r)], -1.0);
    EXPECT_EQ(l.beta2[static_cast<std::size_t>(c)], 0.75);
    EXPECT_DOUBLE_EQ(l.log10_cost(1, 3), std::log10(1.0 + 0.0625));
}

TEST(Analysis, DefaultAxisHasExactLandmarks)
{
    const auto axis = linspace(-1.5, 1.5, 61);
    EXPECT_EQ(axis.size(), 61u);
    EXPECT_EQ(axis[10], -1.0);
    EXPECT_EQ(axis[30], 0.0);
    EXPECT_EQ(axis[50], 1.0);
}

TEST(Analysis, EmptyLogIsHeaderOnly)
{
    const auto d = temp_dir("log");
    export_curves({}, d / "log.csv");
    EXPECT_EQ(slurp(d / "log.csv"), std::string(log_csv_header) + "\n");
    EXPECT_TRUE(read_curves(d / "log.csv").empty());
}

TEST(Analysis, LogRoundTripsExactly)
{
    const auto d = temp_dir("log2");
    std::vector<IterationRecord> log(3);
    for (int k = 0; k < 3; ++k) {
        log[k].iteration = k;
        log[k].cost_half = 1.0 / (3.0 + k);
        log[k].cost_full = std::sqrt(2.0) * k;
        log[k].err = k == 0 ? std::numeric_limits<double>::quiet_NaN() : 0.1 * k;
        log[k].alpha_mean = -1234.5678901234567;
        log[k].beta = 1e-300;
    }
    export_curves(log, d / "log.csv");
    const auto back = read_curves(d / "log.csv");
    ASSERT_EQ(back.size(), 3u);
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(back[k].iteration, k);
        EXPECT_EQ(back[k].cost_half, log[k].cost_half);
        EXPECT_EQ(back[k].cost_full, log[k].cost_full);
        EXPECT_EQ(back[k].alpha_mean, log[k].alpha_mean);
        EXPECT_EQ(back[k].beta, log[k].beta);
    }
    EXPECT_TRUE(std::isnan(back[0].err));
    EXPECT_EQ(back[2].err, 0.2);
    export_curves(back, d / "again.csv");
    EXPECT_EQ(slurp(d / "log.csv"), slurp(d / "again.csv"));
}

TEST(Analysis, MapExportRoundTripAndExtrema)
{
    const auto d = temp_dir("map");
    const Grid g = make_centered_grid(1.0, 0.1, 3);
    const Subdomain dom = Subdomain::centered_square(g, 0.5);
    RVector v(static_cast<Eigen::Index>(dom.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = std::sin(0.37 * k) * 3.0 + 1.0 / 3.0;
    export_map(dom, v, d / "m");
    const auto m = read_map_csv(d / "m.csv");
    EXPECT_EQ(m.nx, dom.box_nx());
    EXPECT_EQ(m.ny, dom.box_ny());
    EXPECT_EQ(m.dx, 0.1);
    EXPECT_EQ(m.origin_x, dom.extent().first.x);
    EXPECT_EQ(m.values, v);
    const auto ext = read_pgm_sidecar(d / "m.pgm");
    EXPECT_EQ(ext.min, v.minCoeff());
    EXPECT_EQ(ext.max, v.maxCoeff());

    // PGM header and the brightest pixel
    const std::string pgm = slurp(d / "m.pgm");
    const std::string head = "P5\n" + std::to_string(m.nx) + " " + std::to_string(m.ny) + "\n65535\n";
    ASSERT_EQ(pgm.substr(0, head.size()), head);
    EXPECT_EQ(pgm.size(), head.size() + 2 * v.size());
    Eigen::Index kmax;
    v.maxCoeff(&kmax);
    const int ix = static_cast<int>(kmax) % m.nx, iy = static_cast<int>(kmax) / m.nx;
    const std::size_t off = head.size() + 2 * static_cast<std::size_t>((m.ny - 1 - iy) * m.nx + ix);
    EXPECT_EQ(static_cast<unsigned char>(pgm[off]), 0xff);
    EXPECT_EQ(static_cast<unsigned char>(pgm[off + 1]), 0xff);

    export_map(dom, v, d / "again");
    EXPECT_EQ(slurp(d / "m.csv"), slurp(d / "again.csv"));
    EXPECT_EQ(slurp(d / "m.pgm"), slurp(d / "again.pgm"));
}

TEST(Analysis, ContrastMapsRoundTrip)
{
    const auto d = temp_dir("contrast");
    const Grid g = make_centered_grid(1.0, 0.1, 3);
    const Subdomain dom = Subdomain::centered_square(g, 0.4);
    ContrastMap c(static_cast<Eigen::Index>(dom.size()));
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        c.delta_eps[k] = 0.1 * k;
        c.delta_sigma[k] = 1e-3 / (1.0 + k);
    }
    export_map(dom, c, d / "c");
    const auto back = read_contrast_maps(d / "c");
    EXPECT_EQ(back.delta_eps, c.delta_eps);
    EXPECT_EQ(back.delta_sigma, c.delta_sigma);
}

TEST(Analysis, NonRectangularDomainCannotBeMapped)
{
    const Grid g = make_centered_grid(1.0, 0.1, 3);
    const Subdomain dom(g, {g.index(5, 5), g.index(7, 6)});
    EXPECT_THROW(map_of(dom, RVector::Zero(2)), std::invalid_argument);
}

TEST(Analysis, SolutionStateRoundTrip)
{
    const auto d = temp_dir("state");
    const auto x = random_point(3, 2, 17, 8);
    write_solution_csv(x, d / "s.csv");
    EXPECT_TRUE(same(read_solution_csv(d / "s.csv", 3, 2, 17), x));
    EXPECT_THROW(read_solution_csv(d / "s.csv", 4, 2, 17), IoError);
}

TEST(Analysis, LandscapeCsvRoundTrip)
{
    const auto d = temp_dir("land");
    const auto l = landscape([](double a, double b) { return std::exp(a - b) + 1.0; }, linspace(-1, 1, 4),
                             linspace(-1.5, 1.5, 3));
    write_landscape_csv(l, d / "l.csv");
    const auto back = read_landscape_csv(d / "l.csv");
    EXPECT_EQ(back.beta1, l.beta1);
    EXPECT_EQ(back.beta2, l.beta2);
    EXPECT_EQ(back.log10_cost, l.log10_cost);
    EXPECT_EQ(slurp(d / "l.csv").substr(0, 11), "beta1\\beta2");
}

TEST(Analysis, UnwritablePathReportsIt)
{
    try {
        export_curves({}, "/nonexistent_dir_for_test/log.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_for_test/log.csv"), std::string::npos);
    }
}
