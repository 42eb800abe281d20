#include "lpgp/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

namespace lpgp {

std::string_view to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SE: return "se";
        case KernelFamily::Matern: return "matern";
        case KernelFamily::RQ: return "rq";
        case KernelFamily::GE: return "ge";
        case KernelFamily::PP: return "pp";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "se") return KernelFamily::SE;
    if (name == "matern") return KernelFamily::Matern;
    if (name == "rq") return KernelFamily::RQ;
    if (name == "ge") return KernelFamily::GE;
    if (name == "pp") return KernelFamily::PP;
    throw std::invalid_argument("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double lengthscale, int dim, double nu, double a,
                       int q)
    : family_(family), lengthscale_(lengthscale), dim_(dim), nu_(nu), a_(a), q_(q) {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw std::invalid_argument("kernel lengthscale must be positive");
    if (dim < 1) throw std::invalid_argument("kernel dimension must be >= 1");
    switch (family) {
        case KernelFamily::Matern:
            if (!(nu > 0.0) || !std::isfinite(nu))
                throw std::invalid_argument("Matern nu must be positive");
            break;
        case KernelFamily::RQ:
            if (!(a > 0.0)) throw std::invalid_argument("RQ shape a must be positive");
            break;
        case KernelFamily::GE:
            if (!(a > 0.0) || a > 2.0)
                throw std::invalid_argument("GE exponent a must lie in (0, 2]");
            break;
        case KernelFamily::PP:
            if (q != 0 && q != 1) throw std::invalid_argument("PP degree q must be 0 or 1");
            break;
        case KernelFamily::SE: break;
    }
}

KernelSpec KernelSpec::se(double lengthscale, int dim) {
    return {KernelFamily::SE, lengthscale, dim, 0.0, 0.0, 0};
}
KernelSpec KernelSpec::matern(double nu, double lengthscale, int dim) {
    return {KernelFamily::Matern, lengthscale, dim, nu, 0.0, 0};
}
KernelSpec KernelSpec::rq(double a, double lengthscale, int dim) {
    return {KernelFamily::RQ, lengthscale, dim, 0.0, a, 0};
}
KernelSpec KernelSpec::ge(double a, double lengthscale, int dim) {
    return {KernelFamily::GE, lengthscale, dim, 0.0, a, 0};
}
KernelSpec KernelSpec::pp(int q, double lengthscale, int dim) {
    return {KernelFamily::PP, lengthscale, dim, 0.0, 0.0, q};
}

KernelSpec KernelSpec::make(KernelFamily family, double lengthscale, int dim, double nu,
                            double a, int q) {
    switch (family) {
        case KernelFamily::SE: return se(lengthscale, dim);
        case KernelFamily::Matern: return matern(nu, lengthscale, dim);
        case KernelFamily::RQ: return rq(a, lengthscale, dim);
        case KernelFamily::GE: return ge(a, lengthscale, dim);
        case KernelFamily::PP: return pp(q, lengthscale, dim);
    }
    throw std::invalid_argument("unknown kernel family");
}

KernelSpec KernelSpec::with_lengthscale(double lengthscale) const {
    return {family_, lengthscale, dim_, nu_, a_, q_};
}

double matern_bessel(double nu, double lengthscale, double r) {
    const double z = std::sqrt(2.0 * nu) * r / lengthscale;
    // Below this the product z^nu K_nu(z) is 2^{nu-1} Gamma(nu) to working precision
    // while K_nu(z) itself overflows for large nu.
    if (z < 1e-12) return 1.0;
    const double bessel = std::cyl_bessel_k(nu, z);
    if (bessel == 0.0) return 0.0;
    const double log_value =
        (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(z) + std::log(bessel);
    return std::exp(log_value);
}

std::optional<double> matern_half_integer(double nu, double lengthscale, double r) {
    const double s = r / lengthscale;
    if (nu == 0.5) return std::exp(-s);
    if (nu == 1.5) {
        const double u = std::sqrt(3.0) * s;
        return (1.0 + u) * std::exp(-u);
    }
    if (nu == 2.5) {
        const double u = std::sqrt(5.0) * s;
        return (1.0 + u + u * u / 3.0) * std::exp(-u);
    }
    return std::nullopt;
}

double KernelSpec::eval(double r) const {
    const double s = r / lengthscale_;
    switch (family_) {
        case KernelFamily::SE: return std::exp(-0.5 * s * s);
        case KernelFamily::Matern:
            if (auto closed = matern_half_integer(nu_, lengthscale_, r)) return *closed;
            return matern_bessel(nu_, lengthscale_, r);
        case KernelFamily::RQ: return std::pow(1.0 + r * r / (2.0 * a_ * lengthscale_), -a_);
        case KernelFamily::GE: return std::exp(-std::pow(s, a_));
        case KernelFamily::PP: {
            const int j = pp_exponent();
            const double base = std::max(0.0, 1.0 - s);
            if (q_ == 0) return std::pow(base, j);
            return std::pow(base, j + 1) * ((j + 1) * s + 1.0);
        }
    }
    return 0.0;
}

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const Point> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = spec.eval(0.0);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = spec(points[i], points[j]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, std::span<const Point> a,
                           std::span<const Point> b) {
    Eigen::MatrixXd c(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec(a[i], b[j]);
    return c;
}

SmoothnessProfile::SmoothnessProfile(int k, double alpha, double L) : k_(k), alpha_(alpha), L_(L) {
    if (k < 0) throw std::invalid_argument("smoothness order k must be >= 0");
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("Hoelder constant L must be positive");
}

std::optional<HolderEmbedding> holder_embedding(const KernelSpec& spec) {
    const double theta = spec.lengthscale();
    switch (spec.family()) {
        case KernelFamily::RQ: {
            const double a = spec.a();
            const double c = 1.0 / (spec.dim() * std::pow(1.0 + 1.0 / (2.0 * a * theta), a));
            return HolderEmbedding{1.0, std::sqrt(c)};
        }
        case KernelFamily::GE:
            return HolderEmbedding{0.5, std::sqrt(std::max(spec.a(), 1.0) / theta)};
        case KernelFamily::PP:
            // distances enter the PP kernel as r / theta, hence the 1/theta
            return HolderEmbedding{0.5, std::sqrt((spec.pp_exponent() + spec.q()) / theta)};
        case KernelFamily::SE:
        case KernelFamily::Matern: return std::nullopt;
    }
    return std::nullopt;
}

SmoothnessProfile holder_profile(const KernelSpec& spec, double B, int n,
                                 std::optional<double> L_override) {
    if (!(B > 0.0)) throw std::invalid_argument("norm bound B must be positive");
    const double log_n = std::log(static_cast<double>(n));

    int k = 0;
    double alpha = 1.0;
    double L = B * log_n;
    switch (spec.family()) {
        case KernelFamily::Matern: {
            k = static_cast<int>(std::ceil(spec.nu())) - 1;
            alpha = spec.nu() - k;
            break;
        }
        case KernelFamily::SE:
            k = 1;
            alpha = 1.0;
            break;
        case KernelFamily::RQ:
        case KernelFamily::GE:
        case KernelFamily::PP: {
            const auto emb = *holder_embedding(spec);
            alpha = emb.alpha;
            L = std::numbers::sqrt2 * B * emb.C_K;
            break;
        }
    }
    if (L_override) {
        L = *L_override;
    } else if (n < 2 && (spec.family() == KernelFamily::Matern || spec.family() == KernelFamily::SE)) {
        throw std::invalid_argument("budget n must be >= 2 for the B log(n) Hoelder constant");
    }
    return {k, alpha, L};
}

NoAnalyticBound::NoAnalyticBound(KernelFamily family)
    : std::invalid_argument("no analytic bound for kernel '" + std::string(to_string(family)) +
                            "'; use greedy_info_gain") {}

double info_gain_bound(const KernelSpec& spec, int n, double /*sigma*/) {
    if (n < 1) throw std::invalid_argument("budget n must be >= 1");
    const double log_n = std::log(static_cast<double>(n));
    const double d = spec.dim();
    switch (spec.family()) {
        case KernelFamily::SE: return std::pow(log_n, d + 1.0);
        case KernelFamily::Matern: {
            const double d_tilde = d * (d + 1.0);
            return std::pow(static_cast<double>(n), d_tilde / (d_tilde + 2.0 * spec.nu())) * log_n;
        }
        default: throw NoAnalyticBound(spec.family());
    }
}

double mutual_information(const KernelSpec& spec, std::span<const Point> subset, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("noise scale sigma must be positive");
    if (subset.empty()) return 0.0;
    Eigen::MatrixXd m = gram(spec, subset) / (sigma * sigma);
    m.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw std::runtime_error("I + K/sigma^2 is not positive definite");
    const Eigen::MatrixXd& l = llt.matrixLLT();
    return l.diagonal().array().log().sum();  // 0.5 * log det = sum log diag(L)
}

GreedyInfoGain greedy_info_gain_detail(const KernelSpec& spec, std::span<const Point> grid,
                                       int n, double sigma) {
    if (n < 1) throw std::invalid_argument("greedy_info_gain requires n >= 1");
    if (static_cast<std::size_t>(n) > grid.size())
        throw std::invalid_argument("greedy_info_gain: n exceeds the grid size");
    if (!(sigma > 0.0)) throw std::invalid_argument("noise scale sigma must be positive");

    const auto size = static_cast<Eigen::Index>(grid.size());
    const double noise = sigma * sigma;
    Eigen::VectorXd variance = Eigen::VectorXd::Constant(size, spec.eval(0.0));
    // Columns of the incomplete Cholesky factor of K + noise I, restricted to the grid.
    Eigen::MatrixXd factor(size, n);

    GreedyInfoGain out;
    out.selected.reserve(static_cast<std::size_t>(n));
    for (int step = 0; step < n; ++step) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < size; ++i)
            if (variance(i) > variance(best)) best = i;
        out.selected.push_back(static_cast<std::size_t>(best));

        const double pivot = std::sqrt(variance(best) + noise);
        for (Eigen::Index i = 0; i < size; ++i) {
            double c = spec(grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(best)]);
            for (int l = 0; l < step; ++l) c -= factor(i, l) * factor(best, l);
            factor(i, step) = c / pivot;
        }
        for (Eigen::Index i = 0; i < size; ++i)
            variance(i) = std::max(0.0, variance(i) - factor(i, step) * factor(i, step));
    }

    std::vector<Point> chosen;
    chosen.reserve(out.selected.size());
    for (auto idx : out.selected) chosen.push_back(grid[idx]);
    out.mutual_information = mutual_information(spec, chosen, sigma);
    out.gamma_bound = out.mutual_information / (1.0 - std::exp(-1.0));
    return out;
}

double greedy_info_gain(const KernelSpec& spec, std::span<const Point> grid, int n,
                        double sigma) {
    return greedy_info_gain_detail(spec, grid, n, sigma).gamma_bound;
}

double rho0(const SmoothnessProfile& profile, double gamma, int n, int dim) {
    const double a1 = profile.alpha1();
    const double denom = std::sqrt(profile.L() * n * std::pow(static_cast<double>(dim), a1));
    return std::min(1.0, std::pow(gamma / denom, 1.0 / a1));
}

}  // namespace lpgp
