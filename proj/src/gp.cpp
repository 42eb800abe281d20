#include "lpgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace lpgp {

GpPosterior::GpPosterior(KernelSpec spec, double lambda)
    : spec_(std::move(spec)), lambda_(lambda), targets_(0), factor_(0, 0), weights_(0) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("GP regularizer lambda must be positive");
}

GpPosterior GpPosterior::fit(const KernelSpec& spec, const Dataset& data, double lambda) {
    GpPosterior post(spec, lambda);
    post.inputs_.reserve(data.size());
    post.targets_.resize(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].x.size() != spec.dim())
            throw std::invalid_argument("observation dimension does not match the kernel");
        post.inputs_.push_back(data[i].x);
        post.targets_(static_cast<Eigen::Index>(i)) = data[i].y;
    }
    post.refactor();
    return post;
}

void GpPosterior::refactor() {
    const Eigen::MatrixXd g = gram(spec_, inputs_);
    for (double jitter : kJitterLadder) {
        Eigen::MatrixXd a = g;
        a.diagonal().array() += lambda_ + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            jitter_ = jitter;
            factor_ = llt.matrixL();
            solve_targets();
            return;
        }
    }
    throw std::runtime_error("GP factorization failed: Gram matrix is ill-conditioned");
}

void GpPosterior::solve_targets() {
    if (inputs_.empty()) {
        weights_.resize(0);
        return;
    }
    const Eigen::VectorXd half = factor_.triangularView<Eigen::Lower>().solve(targets_);
    weights_ = factor_.transpose().triangularView<Eigen::Upper>().solve(half);
}

GpPosterior GpPosterior::update(const Point& x, double y) const {
    if (x.size() != spec_.dim())
        throw std::invalid_argument("observation dimension does not match the kernel");
    GpPosterior next = *this;
    const auto n = static_cast<Eigen::Index>(inputs_.size());

    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k(i) = spec_(inputs_[static_cast<std::size_t>(i)], x);
    Eigen::VectorXd row = n > 0 ? Eigen::VectorXd(factor_.triangularView<Eigen::Lower>().solve(k))
                                : Eigen::VectorXd(0);
    const double pivot2 = spec_.eval(0.0) + lambda_ + jitter_ - row.squaredNorm();

    next.inputs_.push_back(x);
    next.targets_.conservativeResize(n + 1);
    next.targets_(n) = y;
    if (!(pivot2 > 0.0)) {
        next.refactor();
        return next;
    }
    next.factor_.conservativeResize(n + 1, n + 1);
    next.factor_.row(n).head(n) = row.transpose();
    next.factor_.col(n).setZero();
    next.factor_(n, n) = std::sqrt(pivot2);
    next.solve_targets();
    return next;
}

Prediction GpPosterior::predict(const Point& x) const {
    const double prior = spec_.eval(0.0);
    if (inputs_.empty()) return {0.0, prior};
    const auto n = static_cast<Eigen::Index>(inputs_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k(i) = spec_(inputs_[static_cast<std::size_t>(i)], x);
    const double mean = k.dot(weights_);
    const Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>().solve(k);
    const double variance = std::clamp(prior - v.squaredNorm(), 0.0, prior);
    return {mean, variance};
}

std::vector<Prediction> GpPosterior::predict(std::span<const Point> xs) const {
    const double prior = spec_.eval(0.0);
    std::vector<Prediction> out(xs.size(), Prediction{0.0, prior});
    if (inputs_.empty() || xs.empty()) return out;
    const Eigen::MatrixXd k = cross_gram(spec_, inputs_, xs);
    const Eigen::VectorXd means = k.transpose() * weights_;
    const Eigen::MatrixXd v = factor_.triangularView<Eigen::Lower>().solve(k);
    const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out[j] = {means(jj), std::clamp(prior - reduction(jj), 0.0, prior)};
    }
    return out;
}

double GpPosterior::stddev(const Point& x) const { return std::sqrt(variance(x)); }

double GpPosterior::log_marginal_likelihood() const {
    if (inputs_.empty()) return 0.0;
    const double n = static_cast<double>(inputs_.size());
    return -0.5 * targets_.dot(weights_) - factor_.diagonal().array().log().sum() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
}

double beta(double gamma, double B, double sigma, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (sigma < 0.0 || B < 0.0 || gamma < 0.0)
        throw std::invalid_argument("beta arguments must be non-negative");
    return B + sigma * std::sqrt(2.0 * (gamma + 1.0 + std::log(3.0 / delta)));
}

}  // namespace lpgp
