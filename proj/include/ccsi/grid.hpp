#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccsi/errors.hpp"

namespace ccsi {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Uniform cell-centred grid. Cell (ix, iy) has its centre at
/// (origin_x + ix*dx, origin_y + iy*dy); storage is row-major in x
/// (index = iy*nx + ix). The outer `pml_cells` layers on each side are
/// the absorbing region.
struct Grid {
    int nx = 0;
    int ny = 0;
    double dx = 0.0;
    double dy = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    int pml_cells = 0;

    [[nodiscard]] std::size_t cell_count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    [[nodiscard]] int index(int ix, int iy) const { return iy * nx + ix; }
    [[nodiscard]] int ix_of(int idx) const { return idx % nx; }
    [[nodiscard]] int iy_of(int idx) const { return idx / nx; }
    [[nodiscard]] double x(int ix) const { return origin_x + ix * dx; }
    [[nodiscard]] double y(int iy) const { return origin_y + iy * dy; }
    [[nodiscard]] Point center(int idx) const { return {x(ix_of(idx)), y(iy_of(idx))}; }

    [[nodiscard]] bool in_pml(int ix, int iy) const
    {
        return ix < pml_cells || iy < pml_cells || ix >= nx - pml_cells || iy >= ny - pml_cells;
    }

    /// Closed box spanned by the centres of the non-PML cells.
    [[nodiscard]] std::pair<Point, Point> interior_extent() const
    {
        return {{x(pml_cells), y(pml_cells)}, {x(nx - 1 - pml_cells), y(ny - 1 - pml_cells)}};
    }

    [[nodiscard]] std::string describe() const
    {
        std::ostringstream os;
        os << nx << "x" << ny << " cells, dx=" << dx << " m, dy=" << dy << " m, pml=" << pml_cells;
        return os.str();
    }

    void validate() const
    {
        std::vector<std::string> problems;
        if (!(dx > 0.0) || !(dy > 0.0)) problems.emplace_back("cell size must be positive");
        if (nx < 8 || ny < 8) problems.emplace_back("grid needs at least 8 cells per axis");
        if (pml_cells < 0) problems.emplace_back("pml_cells must be non-negative");
        if (2 * pml_cells >= std::min(nx, ny)) problems.emplace_back("PML layers cover the whole grid");
        if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) problems.emplace_back("origin must be finite");
        if (!problems.empty()) {
            std::string msg = "invalid grid (" + describe() + "):";
            for (const auto& p : problems) msg += " " + p + ";";
            throw ConfigError(msg);
        }
    }
};

/// Square grid centred on the origin whose interior (non-PML) cells cover
/// [-half_width, half_width]^2. Cell edges fall on integer multiples of
/// `cell`, so a box [-a, a]^2 with a a multiple of `cell` is tiled exactly.
inline Grid make_centered_grid(double half_width, double cell, int pml_cells)
{
    if (!(cell > 0.0) || !(half_width > 0.0)) throw ConfigError("make_centered_grid: sizes must be positive");
    const int half = static_cast<int>(std::ceil(half_width / cell - 1e-9));
    Grid g;
    g.nx = g.ny = 2 * (half + pml_cells);
    g.dx = g.dy = cell;
    g.origin_x = g.origin_y = -(g.nx / 2) * cell + 0.5 * cell;
    g.pml_cells = pml_cells;
    g.validate();
    return g;
}

/// Ordered set of grid cells forming the inversion domain, with the
/// restriction (full grid -> domain) and zero extension (domain -> full grid).
class Subdomain {
public:
    Subdomain() = default;

    Subdomain(Grid grid, std::vector<int> cells) : grid_(grid), cells_(std::move(cells))
    {
        grid_.validate();
        std::vector<int> sorted = cells_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("subdomain cell indices must be unique");
        for (int c : cells_) {
            if (c < 0 || static_cast<std::size_t>(c) >= grid_.cell_count())
                throw ConfigError("subdomain cell index out of range");
            if (grid_.in_pml(grid_.ix_of(c), grid_.iy_of(c)))
                throw ConfigError("subdomain cell lies inside the PML");
        }
        compute_box();
    }

    /// Cells whose centres lie in [xmin, xmax] x [ymin, ymax].
    static Subdomain box(const Grid& grid, double xmin, double xmax, double ymin, double ymax)
    {
        constexpr double slack = 1e-9;
        std::vector<int> cells;
        for (int iy = 0; iy < grid.ny; ++iy) {
            const double y = grid.y(iy);
            if (y < ymin - slack || y > ymax + slack) continue;
            for (int ix = 0; ix < grid.nx; ++ix) {
                const double x = grid.x(ix);
                if (x < xmin - slack || x > xmax + slack) continue;
                cells.push_back(grid.index(ix, iy));
            }
        }
        if (cells.empty()) throw ConfigError("subdomain box contains no cell centres");
        return Subdomain(grid, std::move(cells));
    }

    /// Cells of the box [-half_width, half_width]^2 whose centres lie strictly inside it.
    static Subdomain centered_square(const Grid& grid, double half_width)
    {
        const double inset = 0.25 * std::min(grid.dx, grid.dy);
        return box(grid, -half_width + inset, half_width - inset, -half_width + inset, half_width - inset);
    }

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<int>& cells() const { return cells_; }
    [[nodiscard]] std::size_t size() const { return cells_.size(); }
    [[nodiscard]] Point center(std::size_t k) const { return grid_.center(cells_[k]); }

    /// True when the cells form a full rectangle in row-major order.
    [[nodiscard]] bool is_box() const { return is_box_; }
    [[nodiscard]] int box_nx() const { return box_nx_; }
    [[nodiscard]] int box_ny() const { return box_ny_; }

    /// Smallest and largest cell-centre coordinates.
    [[nodiscard]] std::pair<Point, Point> extent() const { return {lo_, hi_}; }

    template <class Vec>
    [[nodiscard]] Vec restrict_field(const Vec& full) const
    {
        Vec out(static_cast<Eigen::Index>(cells_.size()));
        for (std::size_t k = 0; k < cells_.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[cells_[k]];
        return out;
    }

    template <class Vec>
    [[nodiscard]] Vec extend(const Vec& local) const
    {
        Vec out = Vec::Zero(static_cast<Eigen::Index>(grid_.cell_count()));
        for (std::size_t k = 0; k < cells_.size(); ++k) out[cells_[k]] = local[static_cast<Eigen::Index>(k)];
        return out;
    }

private:
    void compute_box()
    {
        if (cells_.empty()) return;
        int ix0 = grid_.nx, ix1 = -1, iy0 = grid_.ny, iy1 = -1;
        for (int c : cells_) {
            ix0 = std::min(ix0, grid_.ix_of(c));
            ix1 = std::max(ix1, grid_.ix_of(c));
            iy0 = std::min(iy0, grid_.iy_of(c));
            iy1 = std::max(iy1, grid_.iy_of(c));
        }
        lo_ = {grid_.x(ix0), grid_.y(iy0)};
        hi_ = {grid_.x(ix1), grid_.y(iy1)};
        box_nx_ = ix1 - ix0 + 1;
        box_ny_ = iy1 - iy0 + 1;
        is_box_ = static_cast<std::size_t>(box_nx_) * static_cast<std::size_t>(box_ny_) == cells_.size();
        for (std::size_t k = 0; is_box_ && k < cells_.size(); ++k) {
            const int expect = grid_.index(ix0 + static_cast<int>(k) % box_nx_, iy0 + static_cast<int>(k) / box_nx_);
            is_box_ = cells_[k] == expect;
        }
    }

    Grid grid_;
    std::vector<int> cells_;
    Point lo_, hi_;
    int box_nx_ = 0;
    int box_ny_ = 0;
    bool is_box_ = false;
};

} // namespace ccsi
