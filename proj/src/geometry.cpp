#include "lpgp/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace lpgp {

namespace {

// Widths below this fraction of the parent side are rounding residue.
constexpr double kSliverTol = 1e-12;

struct Slab {
    double lower;
    double upper;
};

std::vector<Slab> axis_slabs(double a, double b, double r) {
    std::vector<Slab> slabs;
    const double tol = kSliverTol * (b - a);
    for (long l = 0;; ++l) {
        const double lo = a + static_cast<double>(l) * r;
        double hi = a + static_cast<double>(l + 1) * r;
        if (hi >= b - tol) hi = b;
        slabs.push_back({lo, hi});
        if (hi == b) break;
    }
    return slabs;
}

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double radical_inverse(std::size_t index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % static_cast<std::size_t>(base));
        index /= static_cast<std::size_t>(base);
        f /= base;
    }
    return result;
}

}  // namespace

Cell Cell::unit(int dim) {
    Cell c;
    c.lower = Point::Zero(dim);
    c.upper = Point::Ones(dim);
    c.nominal_side = 1.0;
    return c;
}

double Cell::empirical_mean() const {
    if (n_obs == 0) throw std::logic_error("empirical mean of a cell without observations");
    return sum_y / static_cast<double>(n_obs);
}

std::vector<Cell> partition(const Cell& cell, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("partition step must be positive");
    if (r >= cell.nominal_side)
        throw std::invalid_argument("partition step must be smaller than the cell side");
    const int dim = cell.dim();

    std::vector<std::vector<Slab>> axes;
    axes.reserve(static_cast<std::size_t>(dim));
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) {
        axes.push_back(axis_slabs(cell.lower(i), cell.upper(i), r));
        total *= axes.back().size();
    }

    std::vector<Cell> children;
    children.reserve(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    for (std::size_t c = 0; c < total; ++c) {
        Cell child;
        child.lower.resize(dim);
        child.upper.resize(dim);
        child.nominal_side = r;
        for (int i = 0; i < dim; ++i) {
            const Slab& s = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
            child.lower(i) = s.lower;
            child.upper(i) = s.upper;
        }
        children.push_back(std::move(child));
        // odometer increment, last axis fastest
        for (int i = dim - 1; i >= 0; --i) {
            auto& k = idx[static_cast<std::size_t>(i)];
            if (++k < axes[static_cast<std::size_t>(i)].size()) break;
            k = 0;
        }
    }
    return children;
}

bool contains(const Cell& cell, const Point& x) {
    for (int i = 0; i < cell.dim(); ++i)
        if (x(i) < cell.lower(i) || x(i) > cell.upper(i)) return false;
    return true;
}

bool owns(const Cell& cell, const Point& x) {
    for (int i = 0; i < cell.dim(); ++i) {
        const double hi = cell.upper(i);
        if (x(i) < cell.lower(i)) return false;
        if (x(i) >= hi && !(hi >= 1.0 && x(i) <= 1.0)) return false;
    }
    return true;
}

Point map_to_cell(const Cell& cell, const Point& u) {
    Point x = cell.lower + u.cwiseProduct(cell.sides());
    // rounding must not push a draw outside the closed box
    return x.cwiseMax(cell.lower).cwiseMin(cell.upper);
}

Point sample_uniform(const Cell& cell, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Point u(cell.dim());
    for (int i = 0; i < cell.dim(); ++i) u(i) = unif(rng);
    return map_to_cell(cell, u);
}

TilingReport check_tiling(std::span<const Cell> cells, int dim, std::size_t probes,
                          std::mt19937_64& rng) {
    TilingReport report;
    for (const Cell& c : cells) report.volume_sum += c.volume();
    report.probes = probes;
    const Cell unit = Cell::unit(dim);
    for (std::size_t p = 0; p < probes; ++p) {
        const Point x = sample_uniform(unit, rng);
        std::size_t owners = 0;
        for (const Cell& c : cells) owners += owns(c, x) ? 1 : 0;
        if (owners == 0) ++report.uncovered;
        if (owners > 1) ++report.multiply_owned;
    }
    return report;
}

std::vector<Point> halton(std::size_t count, int dim, std::size_t skip) {
    if (dim > static_cast<int>(std::size(kPrimes)))
        throw std::invalid_argument("halton: dimension too large");
    std::vector<Point> pts;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Point p(dim);
        for (int d = 0; d < dim; ++d) p(d) = radical_inverse(i + skip, kPrimes[d]);
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace lpgp
