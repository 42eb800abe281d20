#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "lpgp/geometry.hpp"
#include "lpgp/kernels.hpp"
#include "lpgp/types.hpp"

namespace lpgp {

/// Monomials x^a with |a| <= k in D variables, graded-lexicographic order
/// (constant first, then degree 1 with x_0 before x_1, and so on).
class MonomialBasis {
public:
    MonomialBasis(int dim, int degree);

    int dim() const { return dim_; }
    int degree() const { return degree_; }
    std::size_t size() const { return exponents_.size(); }
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    Eigen::VectorXd evaluate(const Point& u) const;

private:
    int dim_;
    int degree_;
    std::vector<std::vector<int>> exponents_;
};

/// Interpolation weights of a local polynomial estimator.
struct LpWeights {
    Eigen::VectorXd weights;
    double l1 = 0.0;
    double l2 = 0.0;
    double residual = 0.0;  ///< ||M w - m(z)||_inf
    bool feasible = true;
    bool fallback_uniform = false;

    static LpWeights uniform(std::size_t n, bool as_fallback = false);
};

inline constexpr double kFeasibilityTol = 1e-6;
inline constexpr double kSingularCutoff = 1e-10;

/// Minimum-norm solver for the polynomial-reproduction constraints of one
/// design. The design matrix factorization is independent of the query
/// point, so one solver serves every z in the cell.
class LpSolver {
public:
    LpSolver(std::span<const Point> points, const Cell& cell, int degree);

    LpWeights solve(const Point& z) const;
    std::size_t size() const { return n_; }

private:
    Point to_unit(const Point& x) const;

    Cell cell_;
    MonomialBasis basis_;
    std::size_t n_;
    Eigen::MatrixXd design_;  // P x n, monomials evaluated at rescaled points
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
};

/// Minimum-l2-norm weights v with sum_x v_x p(x) = p(z) for every p of degree <= k.
/// Infeasibility is reported in the result, never thrown.
LpWeights solve_weights(std::span<const Point> points, const Point& z, int degree,
                        const Cell& cell);

/// Weight rule of the estimator: uniform 1/n_E unless n_E > (k+2)^D, in which
/// case the minimum-norm solution, falling back to uniform when infeasible.
class LocalPolyRule {
public:
    LocalPolyRule(std::span<const Point> points, const Cell& cell, int degree);
    LpWeights weights(const Point& z) const;
    bool uses_solver() const { return solver_.has_value(); }

private:
    std::size_t n_;
    std::optional<LpSolver> solver_;
};

struct LocalEstimate {
    double value;
    LpWeights weights;
};

/// Local polynomial estimate of f(z) from the observations of the cell.
LocalEstimate local_poly(const Cell& cell, std::span<const Observation> data, const Point& z,
                         int degree);

struct ErrorTerms {
    double bias;   ///< e_D = (1 + ||w||_1) L (sqrt(D) r_E)^{k+alpha}
    double noise;  ///< e_S = sigma ||w||_2 sqrt(2 log(2/delta))
    double total() const { return bias + noise; }
};

ErrorTerms error_terms(const LpWeights& w, const SmoothnessProfile& profile, double r_E, int dim,
                       double sigma, double delta);

/// Candidate points used for the maximum in max_err: the 2^D corners, the
/// center, and max(min_interior, 2 (k+2)^D) Halton points mapped into the cell.
std::vector<Point> max_err_candidates(const Cell& cell, int degree,
                                      std::size_t min_interior = 64);

/// Largest estimation error bound over the cell, approximated on the candidate set.
double max_err(const Cell& cell, std::span<const Observation> data,
               const SmoothnessProfile& profile, double sigma, double delta,
               std::size_t min_interior = 64);

}  // namespace lpgp
