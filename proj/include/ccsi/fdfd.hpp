#pragma once

// TM (E_z) finite-difference frequency-domain modelling on a uniform grid.
//
// Time convention exp(+i w t). The system matrix is the free-space scalar
// Helmholtz operator with complex-stretched PML, scaled so that w^2 (through
// the wavenumber) is absorbed:
//
//     A = -(L_pml + kh^2) / kh^2,
//
// where kh^2 is k0^2, optionally replaced by its dispersion-corrected stencil
// value (see stencil_wavenumber_sq). With this scaling the scattered field of
// a contrast source j = chi * e on the grid is A^{-1} j, and a medium with
// contrast chi has the system matrix A - diag(chi). Unit sources
// s = delta/(dx*dy) give A^{-1}s ~ k0^2 * G0 with G0 = -(i/4) H0^(2)(k0 r) the
// outgoing 2-D Green's function.

#include <cmath>
#include <complex>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ccsi/grid.hpp"

namespace ccsi {

inline constexpr double speed_of_light = 299792458.0;
inline constexpr double pi = 3.14159265358979323846;

using SparseMatrix = Eigen::SparseMatrix<Complex>;
using CMatrix = Eigen::MatrixXcd;

inline double angular_frequency(double freq_hz) { return 2.0 * pi * freq_hz; }
inline double wavenumber(double omega) { return omega / speed_of_light; }

struct FdfdOptions {
    double reflection = 1e-6; // theoretical normal-incidence reflection
    int profile_order = 2;    // polynomial grading
    // Replace k0^2 by the angle-averaged 5-point-stencil eigenvalue of a
    // plane wave with wavenumber k0, which cancels the isotropic part of
    // the numerical phase error.
    bool dispersion_corrected = true;
};

/// Squared wavenumber used on the diagonal of the 5-point operator.
inline double stencil_wavenumber_sq(double k0, double dx, double dy, bool corrected)
{
    if (!corrected) return k0 * k0;
    return 2.0 / (dx * dx) * (1.0 - std::cyl_bessel_j(0.0, k0 * dx)) +
           2.0 / (dy * dy) * (1.0 - std::cyl_bessel_j(0.0, k0 * dy));
}

namespace detail {

// Stretch factor at fractional index u along an axis of n cells with `pml`
// absorbing cells on each side. Interior/PML interfaces sit half a cell
// outside the last interior cell centres.
inline Complex pml_stretch(double u, int n, int pml, double cell, double k0, const FdfdOptions& opts)
{
    if (pml == 0) return {1.0, 0.0};
    const double left = pml - 0.5;
    const double right = n - pml - 0.5;
    double depth = 0.0;
    if (u < left) depth = left - u;
    else if (u > right) depth = u - right;
    if (depth <= 0.0) return {1.0, 0.0};
    const double thickness = pml * cell;
    const double m = opts.profile_order;
    const double sigma_max = -(m + 1.0) * std::log(opts.reflection) / (2.0 * thickness * k0);
    return {1.0, -sigma_max * std::pow(depth / pml, m)};
}

inline bool all_finite(const CVector& v)
{
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (!std::isfinite(v[k].real()) || !std::isfinite(v[k].imag())) return false;
    return true;
}

} // namespace detail

/// Assembled and factorized TM system for one frequency. Immutable after
/// construction; solves allocate their own workspace and may run concurrently.
class FrequencyOperator {
public:
    FrequencyOperator(const Grid& grid, double omega, const CVector* full_contrast = nullptr,
                      const FdfdOptions& pml = {})
        : grid_(grid), omega_(omega), k0_(wavenumber(omega))
    {
        if (!(omega > 0.0)) throw std::invalid_argument("assemble_tm: omega must be positive");
        grid_.validate();
        if (full_contrast && full_contrast->size() != static_cast<Eigen::Index>(grid_.cell_count()))
            throw std::invalid_argument("assemble_tm: contrast length does not match grid");
        assemble(full_contrast, pml);
        lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
        lu_->analyzePattern(matrix_);
        lu_->factorize(matrix_);
        if (lu_->info() != Eigen::Success) {
            std::ostringstream os;
            os << "FDFD factorization failed at f=" << omega_ / (2.0 * pi) << " Hz on grid " << grid_.describe()
               << ": " << lu_->lastErrorMessage();
            throw NumericalError(os.str());
        }
    }

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] double omega() const { return omega_; }
    [[nodiscard]] double k0() const { return k0_; }
    [[nodiscard]] const SparseMatrix& matrix() const { return matrix_; }

    [[nodiscard]] CVector apply(const CVector& x) const { return matrix_ * x; }
    [[nodiscard]] CVector apply_adjoint(const CVector& x) const { return matrix_.adjoint() * x; }

    [[nodiscard]] CVector solve(const CVector& source) const
    {
        check_rhs(source);
        return lu_->solve(source);
    }

    [[nodiscard]] CVector solve_adjoint(const CVector& v) const
    {
        check_rhs(v);
        return lu_->adjoint().solve(v);
    }

    [[nodiscard]] CMatrix solve(const CMatrix& sources) const { return lu_->solve(sources); }
    [[nodiscard]] CMatrix solve_adjoint(const CMatrix& v) const { return lu_->adjoint().solve(v); }

private:
    void check_rhs(const CVector& v) const
    {
        if (v.size() != static_cast<Eigen::Index>(grid_.cell_count()))
            throw std::invalid_argument("FDFD solve: vector length does not match grid");
        if (!detail::all_finite(v)) throw std::invalid_argument("FDFD solve: non-finite right-hand side");
    }

    void assemble(const CVector* full_contrast, const FdfdOptions& pml)
    {
        const int nx = grid_.nx, ny = grid_.ny, np = grid_.pml_cells;
        const double dx = grid_.dx, dy = grid_.dy;
        const double k2 = stencil_wavenumber_sq(k0_, dx, dy, pml.dispersion_corrected);
        auto sx = [&](double u) { return detail::pml_stretch(u, nx, np, dx, k0_, pml); };
        auto sy = [&](double u) { return detail::pml_stretch(u, ny, np, dy, k0_, pml); };

        std::vector<Eigen::Triplet<Complex>> trip;
        trip.reserve(grid_.cell_count() * 5);
        for (int iy = 0; iy < ny; ++iy) {
            const Complex syc = sy(iy);
            const Complex cym = 1.0 / (syc * sy(iy - 0.5) * dy * dy);
            const Complex cyp = 1.0 / (syc * sy(iy + 0.5) * dy * dy);
            for (int ix = 0; ix < nx; ++ix) {
                const int row = grid_.index(ix, iy);
                const Complex sxc = sx(ix);
                const Complex cxm = 1.0 / (sxc * sx(ix - 0.5) * dx * dx);
                const Complex cxp = 1.0 / (sxc * sx(ix + 0.5) * dx * dx);
                // Dirichlet walls: neighbours beyond the grid are zero.
                if (ix > 0) trip.emplace_back(row, row - 1, -cxm / k2);
                if (ix + 1 < nx) trip.emplace_back(row, row + 1, -cxp / k2);
                if (iy > 0) trip.emplace_back(row, row - nx, -cym / k2);
                if (iy + 1 < ny) trip.emplace_back(row, row + nx, -cyp / k2);
                Complex diag = (cxm + cxp + cym + cyp - k2) / k2;
                if (full_contrast) diag -= (*full_contrast)[row];
                trip.emplace_back(row, row, diag);
            }
        }
        const auto n = static_cast<Eigen::Index>(grid_.cell_count());
        matrix_.resize(n, n);
        matrix_.setFromTriplets(trip.begin(), trip.end());
        matrix_.makeCompressed();
    }

    Grid grid_;
    double omega_;
    double k0_;
    SparseMatrix matrix_;
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

/// Free-space operator at one frequency.
inline std::shared_ptr<const FrequencyOperator> assemble_tm(const Grid& grid, double omega, const FdfdOptions& pml = {})
{
    return std::make_shared<const FrequencyOperator>(grid, omega, nullptr, pml);
}

/// Operator of the medium with the given contrast (full-grid, zero outside the object).
inline std::shared_ptr<const FrequencyOperator> assemble_tm_with_contrast(const Grid& grid, double omega,
                                                                          const CVector& full_contrast,
                                                                          const FdfdOptions& pml = {})
{
    return std::make_shared<const FrequencyOperator>(grid, omega, &full_contrast, pml);
}

inline CVector solve(const FrequencyOperator& op, const CVector& source) { return op.solve(source); }
inline CVector solve_adjoint(const FrequencyOperator& op, const CVector& v) { return op.solve_adjoint(v); }

/// H0^(2)(x) = J0(x) - i Y0(x), outgoing for exp(+i w t).
inline Complex hankel2_0(double x) { return {std::cyl_bessel_j(0.0, x), -std::cyl_neumann(0.0, x)}; }

/// Field of a unit line source in the A-scaled convention: -(i/4) k0^2 H0^(2)(k0 r).
/// Points closer than `standoff` are evaluated at r = standoff.
inline Complex line_source_field(Point src, Point at, double omega, double standoff = 0.0)
{
    const double k0 = wavenumber(omega);
    const double r = std::max(std::hypot(at.x - src.x, at.y - src.y), standoff);
    if (!(r > 0.0)) throw std::invalid_argument("line_source_field: evaluation point coincides with the source");
    return Complex(0.0, -0.25) * (k0 * k0) * hankel2_0(k0 * r);
}

/// Analytic line-source field at every cell centre. A cell whose centre
/// coincides with the source is evaluated at a half-cell standoff.
inline CVector incident_field_line_source(const Grid& grid, Point src, double omega)
{
    const double standoff = 0.5 * std::min(grid.dx, grid.dy);
    CVector e(static_cast<Eigen::Index>(grid.cell_count()));
    for (std::size_t k = 0; k < grid.cell_count(); ++k)
        e[static_cast<Eigen::Index>(k)] = line_source_field(src, grid.center(static_cast<int>(k)), omega, standoff);
    return e;
}

/// Bilinear interpolation from cell centres to a set of receiver positions.
class ReceiverOperator {
public:
    ReceiverOperator() = default;

    ReceiverOperator(const Grid& grid, std::vector<Point> positions) : grid_(grid), positions_(std::move(positions))
    {
        const auto n = static_cast<Eigen::Index>(grid_.cell_count());
        std::vector<Eigen::Triplet<Complex>> trip;
        for (std::size_t q = 0; q < positions_.size(); ++q) {
            for (const auto& [cell, w] : bilinear_weights(grid_, positions_[q]))
                trip.emplace_back(static_cast<Eigen::Index>(q), cell, w);
        }
        interp_.resize(static_cast<Eigen::Index>(positions_.size()), n);
        interp_.setFromTriplets(trip.begin(), trip.end());
        interp_.makeCompressed();
        adjoint_ = interp_.adjoint();
    }

    /// Weights of the (at most) four cells surrounding `p`. Throws when the
    /// interpolation stencil would touch the PML.
    static std::vector<std::pair<int, double>> bilinear_weights(const Grid& grid, Point p)
    {
        const double u = (p.x - grid.origin_x) / grid.dx;
        const double v = (p.y - grid.origin_y) / grid.dy;
        int i0 = static_cast<int>(std::floor(u));
        int j0 = static_cast<int>(std::floor(v));
        double fu = u - i0, fv = v - j0;
        // Exactly on the last interior centre: shift to the previous stencil.
        if (i0 == grid.nx - 1 - grid.pml_cells && fu < 1e-12) { --i0; fu = 1.0; }
        if (j0 == grid.ny - 1 - grid.pml_cells && fv < 1e-12) { --j0; fv = 1.0; }
        if (i0 < grid.pml_cells || j0 < grid.pml_cells || i0 + 1 > grid.nx - 1 - grid.pml_cells ||
            j0 + 1 > grid.ny - 1 - grid.pml_cells) {
            std::ostringstream os;
            os << "receiver/source at (" << p.x << ", " << p.y << ") m lies in or beyond the PML of grid "
               << grid.describe();
            throw ConfigError(os.str());
        }
        std::vector<std::pair<int, double>> w;
        const double wts[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
        const int cells[4] = {grid.index(i0, j0), grid.index(i0 + 1, j0), grid.index(i0, j0 + 1),
                              grid.index(i0 + 1, j0 + 1)};
        for (int k = 0; k < 4; ++k)
            if (wts[k] != 0.0) w.emplace_back(cells[k], wts[k]);
        return w;
    }

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<Point>& positions() const { return positions_; }
    [[nodiscard]] std::size_t size() const { return positions_.size(); }
    [[nodiscard]] const SparseMatrix& matrix() const { return interp_; }

    [[nodiscard]] CVector sample(const CVector& full) const { return interp_ * full; }
    [[nodiscard]] CVector spread(const CVector& per_receiver) const { return adjoint_ * per_receiver; }

private:
    Grid grid_;
    std::vector<Point> positions_;
    SparseMatrix interp_;
    SparseMatrix adjoint_;
};

/// Unit line current at `pos`, spread bilinearly over the surrounding cells
/// as a current density (weights / (dx*dy)).
inline CVector point_source(const Grid& grid, Point pos)
{
    CVector s = CVector::Zero(static_cast<Eigen::Index>(grid.cell_count()));
    const double density = 1.0 / (grid.dx * grid.dy);
    for (const auto& [cell, w] : ReceiverOperator::bilinear_weights(grid, pos)) s[cell] += w * density;
    return s;
}

/// Data at the receivers radiated by a contrast source on the domain.
inline CVector measure(const ReceiverOperator& rx, const FrequencyOperator& op, const Subdomain& domain,
                       const CVector& j)
{
    if (j.size() != static_cast<Eigen::Index>(domain.size()))
        throw std::invalid_argument("measure: contrast source length does not match the domain");
    return rx.sample(op.solve(domain.extend(j)));
}

inline CVector measure_adjoint(const ReceiverOperator& rx, const FrequencyOperator& op, const Subdomain& domain,
                               const CVector& y)
{
    if (y.size() != static_cast<Eigen::Index>(rx.size()))
        throw std::invalid_argument("measure_adjoint: data length does not match the receivers");
    return domain.restrict_field(op.solve_adjoint(rx.spread(y)));
}

} // namespace ccsi
