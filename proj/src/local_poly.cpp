#include "lpgp/local_poly.hpp"

#include <cmath>
#include <stdexcept>

namespace lpgp {

namespace {

void graded_exponents(int dim, int total, int axis, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
    if (axis == dim - 1) {
        current[static_cast<std::size_t>(axis)] = total;
        out.push_back(current);
        return;
    }
    for (int e = total; e >= 0; --e) {
        current[static_cast<std::size_t>(axis)] = e;
        graded_exponents(dim, total - e, axis + 1, current, out);
    }
}

LpWeights finish(Eigen::VectorXd w, double residual) {
    LpWeights out;
    out.l1 = w.lpNorm<1>();
    out.l2 = w.norm();
    out.residual = residual;
    out.feasible = residual <= kFeasibilityTol && std::isfinite(out.l1);
    out.weights = std::move(w);
    return out;
}

std::size_t solver_threshold(int degree, int dim) {
    std::size_t t = 1;
    for (int i = 0; i < dim; ++i) t *= static_cast<std::size_t>(degree + 2);
    return t;
}

}  // namespace

MonomialBasis::MonomialBasis(int dim, int degree) : dim_(dim), degree_(degree) {
    if (dim < 1) throw std::invalid_argument("monomial basis needs dim >= 1");
    if (degree < 0) throw std::invalid_argument("monomial degree must be non-negative");
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    for (int total = 0; total <= degree; ++total)
        graded_exponents(dim, total, 0, current, exponents_);
}

Eigen::VectorXd MonomialBasis::evaluate(const Point& u) const {
    Eigen::VectorXd m(static_cast<Eigen::Index>(exponents_.size()));
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
        double v = 1.0;
        for (int i = 0; i < dim_; ++i) {
            const int e = exponents_[j][static_cast<std::size_t>(i)];
            for (int p = 0; p < e; ++p) v *= u(i);
        }
        m(static_cast<Eigen::Index>(j)) = v;
    }
    return m;
}

LpWeights LpWeights::uniform(std::size_t n, bool as_fallback) {
    if (n == 0) throw std::invalid_argument("uniform weights need at least one point");
    LpWeights out = finish(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                     1.0 / static_cast<double>(n)),
                           0.0);
    out.feasible = !as_fallback;
    out.fallback_uniform = as_fallback;
    return out;
}

LpSolver::LpSolver(std::span<const Point> points, const Cell& cell, int degree)
    : cell_(cell), basis_(cell.dim(), degree), n_(points.size()) {
    if (points.empty()) throw std::invalid_argument("local polynomial needs data");
    design_.resize(static_cast<Eigen::Index>(basis_.size()), static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) {
        if (points[j].size() != cell.dim())
            throw std::invalid_argument("point dimension does not match the cell");
        design_.col(static_cast<Eigen::Index>(j)) = basis_.evaluate(to_unit(points[j]));
    }
    svd_.compute(design_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd_.setThreshold(kSingularCutoff);
}

Point LpSolver::to_unit(const Point& x) const {
    const Point sides = cell_.sides();
    return (2.0 * (x - cell_.lower).array() / sides.array() - 1.0).matrix();
}

LpWeights LpSolver::solve(const Point& z) const {
    const Eigen::VectorXd m = basis_.evaluate(to_unit(z));
    Eigen::VectorXd w = svd_.solve(m);
    const double residual = (design_ * w - m).lpNorm<Eigen::Infinity>();
    return finish(std::move(w), residual);
}

LpWeights solve_weights(std::span<const Point> points, const Point& z, int degree,
                        const Cell& cell) {
    return LpSolver(points, cell, degree).solve(z);
}

LocalPolyRule::LocalPolyRule(std::span<const Point> points, const Cell& cell, int degree)
    : n_(points.size()) {
    if (points.empty()) throw std::invalid_argument("local polynomial needs data");
    if (n_ > solver_threshold(degree, cell.dim())) solver_.emplace(points, cell, degree);
}

LpWeights LocalPolyRule::weights(const Point& z) const {
    if (!solver_) return LpWeights::uniform(n_);
    LpWeights w = solver_->solve(z);
    if (!w.feasible) return LpWeights::uniform(n_, true);
    return w;
}

LocalEstimate local_poly(const Cell& cell, std::span<const Observation> data, const Point& z,
                         int degree) {
    if (data.empty()) throw std::invalid_argument("local polynomial estimate of an empty cell");
    std::vector<Point> xs;
    xs.reserve(data.size());
    for (const auto& o : data) xs.push_back(o.x);
    LocalPolyRule rule(xs, cell, degree);
    LpWeights w = rule.weights(z);
    double value = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        value += w.weights(static_cast<Eigen::Index>(i)) * data[i].y;
    return {value, std::move(w)};
}

ErrorTerms error_terms(const LpWeights& w, const SmoothnessProfile& profile, double r_E, int dim,
                       double sigma, double delta) {
    if (!(delta > 0.0 && delta < 2.0)) throw std::invalid_argument("delta must lie in (0, 2)");
    const double reach = std::sqrt(static_cast<double>(dim)) * r_E;
    ErrorTerms e;
    e.bias = (1.0 + w.l1) * profile.L() * std::pow(reach, profile.order());
    e.noise = sigma * w.l2 * std::sqrt(2.0 * std::log(2.0 / delta));
    return e;
}

std::vector<Point> max_err_candidates(const Cell& cell, int degree, std::size_t min_interior) {
    const int dim = cell.dim();
    std::vector<Point> pts;
    for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
        Point c(dim);
        for (int i = 0; i < dim; ++i) c(i) = (mask >> i) & 1U ? cell.upper(i) : cell.lower(i);
        pts.push_back(std::move(c));
    }
    pts.push_back(cell.center());
    const std::size_t interior = std::max(min_interior, 2 * solver_threshold(degree, dim));
    for (const Point& u : halton(interior, dim)) pts.push_back(map_to_cell(cell, u));
    return pts;
}

double max_err(const Cell& cell, std::span<const Observation> data,
               const SmoothnessProfile& profile, double sigma, double delta,
               std::size_t min_interior) {
    if (data.empty()) throw std::invalid_argument("max_err of an empty cell");
    std::vector<Point> xs;
    xs.reserve(data.size());
    for (const auto& o : data) xs.push_back(o.x);
    const LocalPolyRule rule(xs, cell, profile.k());
    double worst = 0.0;
    for (const Point& z : max_err_candidates(cell, profile.k(), min_interior)) {
        const ErrorTerms e =
            error_terms(rule.weights(z), profile, cell.nominal_side, cell.dim(), sigma, delta);
        worst = std::max(worst, e.total());
    }
    return worst;
}

}  // namespace lpgp
