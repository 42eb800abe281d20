#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "lpgp/types.hpp"

namespace lpgp {

enum class KernelFamily { SE, Matern, RQ, GE, PP };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Normalized, stationary, isotropic kernel with its hyperparameters.
///
/// Construct through the named factories; they reject invalid
/// hyperparameters so that evaluation never has to.
class KernelSpec {
public:
    static KernelSpec se(double lengthscale, int dim);
    static KernelSpec matern(double nu, double lengthscale, int dim);
    static KernelSpec rq(double a, double lengthscale, int dim);
    static KernelSpec ge(double a, double lengthscale, int dim);
    static KernelSpec pp(int q, double lengthscale, int dim);

    /// Generic factory used by config parsing. Fields irrelevant to the
    /// family are ignored.
    static KernelSpec make(KernelFamily family, double lengthscale, int dim,
                           double nu, double a, int q);

    KernelFamily family() const { return family_; }
    double lengthscale() const { return lengthscale_; }
    double nu() const { return nu_; }
    double a() const { return a_; }
    int q() const { return q_; }
    int dim() const { return dim_; }

    /// Exponent j = floor(D/2) + q + 1 of the piecewise-polynomial kernel.
    int pp_exponent() const { return dim_ / 2 + q_ + 1; }

    KernelSpec with_lengthscale(double lengthscale) const;

    /// K(r) for a Euclidean distance r >= 0.
    double eval(double r) const;
    double operator()(const Point& x, const Point& z) const { return eval((x - z).norm()); }

private:
    KernelSpec(KernelFamily family, double lengthscale, int dim, double nu, double a, int q);

    KernelFamily family_;
    double lengthscale_;
    int dim_;
    double nu_;
    double a_;
    int q_;
};

/// Matern covariance through the modified Bessel function K_nu, valid for any nu > 0.
double matern_bessel(double nu, double lengthscale, double r);

/// Closed forms for nu in {1/2, 3/2, 5/2}; nullopt for any other nu.
std::optional<double> matern_half_integer(double nu, double lengthscale, double r);

/// G[i][j] = K(||x_i - x_j||).
Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const Point> points);

/// Cross covariance C[i][j] = K(||a_i - b_j||).
Eigen::MatrixXd cross_gram(const KernelSpec& spec, std::span<const Point> a,
                           std::span<const Point> b);

/// Hoelder parameters of the RKHS elements: f in C^{k,alpha} with norm <= L.
class SmoothnessProfile {
public:
    SmoothnessProfile(int k, double alpha, double L);

    int k() const { return k_; }
    double alpha() const { return alpha_; }
    double L() const { return L_; }
    /// alpha1 = max{alpha, min{1, k}}, the exponent of the first-order variation bound.
    double alpha1() const { return std::max(alpha_, std::min(1.0, static_cast<double>(k_))); }
    /// k + alpha, the exponent of the polynomial approximation error.
    double order() const { return k_ + alpha_; }

    SmoothnessProfile with_L(double L) const { return {k_, alpha_, L}; }

private:
    int k_;
    double alpha_;
    double L_;
};

/// Embedding constant for the kernels whose RKHS embeds in C^{0,alpha}
/// through sqrt(K(0) - K(r)) <= C_K r^alpha. Only RQ, GE and PP have one.
struct HolderEmbedding {
    double alpha;
    double C_K;
};
std::optional<HolderEmbedding> holder_embedding(const KernelSpec& spec);

SmoothnessProfile holder_profile(const KernelSpec& spec, double B, int n,
                                 std::optional<double> L_override = std::nullopt);

/// Thrown when no closed-form information-gain bound is known for a kernel.
class NoAnalyticBound : public std::invalid_argument {
public:
    explicit NoAnalyticBound(KernelFamily family);
};

/// Order-level bound on the maximum information gain gamma_n (leading constants set to 1).
double info_gain_bound(const KernelSpec& spec, int n, double sigma);

/// Result of the greedy maximum-variance selection.
struct GreedyInfoGain {
    std::vector<std::size_t> selected;  ///< grid indices in selection order
    double mutual_information;          ///< 0.5 log det(I + sigma^-2 K_S)
    double gamma_bound;                 ///< (1 - 1/e)^-1 * mutual_information
};
GreedyInfoGain greedy_info_gain_detail(const KernelSpec& spec, std::span<const Point> grid,
                                       int n, double sigma);
double greedy_info_gain(const KernelSpec& spec, std::span<const Point> grid, int n,
                        double sigma);

/// 0.5 log det(I + sigma^-2 K_S) for an arbitrary subset.
double mutual_information(const KernelSpec& spec, std::span<const Point> subset, double sigma);

/// Smallest admissible LP radius threshold, min(1, (gamma / sqrt(L n D^alpha1))^(1/alpha1)).
double rho0(const SmoothnessProfile& profile, double gamma, int n, int dim);

}  // namespace lpgp
