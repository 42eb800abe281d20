#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "lpgp/types.hpp"

namespace lpgp {

/// Axis-aligned box inside [0,1]^D.
///
/// `nominal_side` is r_E: every actual side is at most r_E, and all the
/// confidence formulas use r_E rather than the actual sides. Both corners
/// are stored so that siblings share bit-identical faces.
struct Cell {
    Point lower;
    Point upper;
    double nominal_side = 1.0;
    double u0 = std::numeric_limits<double>::infinity();
    std::size_t n_obs = 0;
    double sum_y = 0.0;
    std::uint64_t created_at = 0;

    static Cell unit(int dim);

    int dim() const { return static_cast<int>(lower.size()); }
    Point sides() const { return upper - lower; }
    Point center() const { return 0.5 * (lower + upper); }
    double volume() const { return sides().prod(); }
    double max_side() const { return sides().maxCoeff(); }
    /// Empirical mean of the observations assigned to this cell.
    double empirical_mean() const;

    void add_observation(double y) {
        ++n_obs;
        sum_y += y;
    }
};

/// Splits a cell on the grid anchored at its lower corner with step r.
///
/// Children have nominal side r; the last slab along an axis is clipped to
/// the parent. Zero-width slabs (r dividing the side exactly) are dropped.
/// Statistics and u0 are left at their defaults.
std::vector<Cell> partition(const Cell& cell, double r);

/// Closed-box membership.
bool contains(const Cell& cell, const Point& x);

/// Half-open membership used to assign observations to exactly one cell:
/// [lower, upper) per axis, closed at the face x_i = 1 of the unit cube.
bool owns(const Cell& cell, const Point& x);

/// Uniform draw from the cell.
Point sample_uniform(const Cell& cell, std::mt19937_64& rng);

/// Point at relative position u in [0,1]^D inside the cell.
Point map_to_cell(const Cell& cell, const Point& u);

/// Summary of a tiling check over a set of cells.
struct TilingReport {
    double volume_sum = 0.0;
    std::size_t probes = 0;
    std::size_t uncovered = 0;      ///< probes owned by no cell
    std::size_t multiply_owned = 0; ///< probes owned by more than one cell

    bool ok(double volume_tol = 1e-9) const {
        return std::abs(volume_sum - 1.0) <= volume_tol && uncovered == 0 && multiply_owned == 0;
    }
};

/// Checks that the cells tile [0,1]^D using uniform probe points.
TilingReport check_tiling(std::span<const Cell> cells, int dim, std::size_t probes,
                          std::mt19937_64& rng);

/// Halton low-discrepancy points in [0,1)^D (prime bases 2, 3, 5, ...), skipping index 0.
std::vector<Point> halton(std::size_t count, int dim, std::size_t skip = 1);

}  // namespace lpgp
