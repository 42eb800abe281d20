#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "lpgp/kernels.hpp"
#include "lpgp/types.hpp"

namespace lpgp {

struct Prediction {
    double mean;
    double variance;
};

/// Exact GP posterior over a training set with regularizer lambda.
///
/// Holds the lower Cholesky factor of G + (lambda + jitter) I and the solved
/// targets. Values are immutable: update() returns an extended copy.
class GpPosterior {
public:
    /// Jitter ladder tried in order before giving up on a factorization.
    static constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

    GpPosterior(KernelSpec spec, double lambda);

    static GpPosterior fit(const KernelSpec& spec, const Dataset& data, double lambda);

    GpPosterior update(const Point& x, double y) const;

    Prediction predict(const Point& x) const;
    /// Batched predictions, one per query point.
    std::vector<Prediction> predict(std::span<const Point> xs) const;
    double mean(const Point& x) const { return predict(x).mean; }
    double variance(const Point& x) const { return predict(x).variance; }
    double stddev(const Point& x) const;

    const KernelSpec& spec() const { return spec_; }
    double lambda() const { return lambda_; }
    double jitter() const { return jitter_; }
    std::size_t size() const { return inputs_.size(); }
    const std::vector<Point>& inputs() const { return inputs_; }
    const Eigen::VectorXd& targets() const { return targets_; }
    /// Lower-triangular factor with factor * factor^T = G + (lambda + jitter) I.
    const Eigen::MatrixXd& factor() const { return factor_; }

    /// log p(y | X) under the prior GP with noise variance lambda.
    double log_marginal_likelihood() const;

private:
    void refactor();
    void solve_targets();

    KernelSpec spec_;
    double lambda_;
    double jitter_ = kJitterLadder[0];
    std::vector<Point> inputs_;
    Eigen::VectorXd targets_;
    Eigen::MatrixXd factor_;
    Eigen::VectorXd weights_;  // (G + lambda I)^{-1} y
};

/// GP-UCB confidence multiplier B + sigma sqrt(2 (gamma + 1 + log(3 / delta))).
double beta(double gamma, double B, double sigma, double delta);

}  // namespace lpgp
