#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>

#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lpgp/geometry.hpp"
#include "lpgp/kernels.hpp"

using namespace lpgp;

namespace {

std::vector<Point> random_points(std::size_t n, int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i) {
        Point p(dim);
        for (int d = 0; d < dim; ++d) p(d) = u(rng);
        out.push_back(p);
    }
    return out;
}

// 0.5 log det(I + K / sigma^2) via a generic LU determinant.
double mi_oracle(const KernelSpec& spec, const std::vector<Point>& s, double sigma) {
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = (i == j ? 1.0 : 0.0) + spec(s[i], s[j]) / (sigma * sigma);
    return 0.5 * std::log(m.determinant());
}

void check_embedding(const KernelSpec& spec, std::uint64_t seed) {
    const auto emb = holder_embedding(spec);
    REQUIRE(emb.has_value());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, std::sqrt(static_cast<double>(spec.dim())));
    for (int i = 0; i < 1000; ++i) {
        double r = u(rng);
        if (r == 0.0) r = 1e-9;
        const double lhs = std::sqrt(std::max(0.0, spec.eval(0.0) - spec.eval(r)));
        const double rhs = emb->C_K * std::pow(r, emb->alpha);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
}

}  // namespace

TEST_CASE("kernel values") {
    CHECK(KernelSpec::se(1.0, 1).eval(0.0) == 1.0);
    CHECK(KernelSpec::matern(0.5, 1.0, 1).eval(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    const double r = 0.5;
    const double s5 = std::sqrt(5.0) * r;
    const double closed = (1.0 + s5 + 5.0 * r * r / 3.0) * std::exp(-s5);
    CHECK(std::abs(KernelSpec::matern(2.5, 1.0, 1).eval(r) - closed) < 1e-15);
    CHECK(std::abs(closed - 0.828649142418125313) < 1e-15);

    CHECK(std::abs(KernelSpec::rq(1.0, 1.0, 1).eval(1.0) - 2.0 / 3.0) < 1e-15);
    for (auto spec : {KernelSpec::rq(2.0, 0.3, 2), KernelSpec::ge(1.5, 0.4, 1),
                      KernelSpec::pp(1, 0.7, 2), KernelSpec::matern(1.7, 0.2, 1)})
        CHECK(spec.eval(0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel factories reject bad hyperparameters") {
    CHECK_THROWS_AS(KernelSpec::se(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::matern(-1.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::ge(2.5, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::pp(2, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::se(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_family("linear"), std::invalid_argument);
}

TEST_CASE("Bessel Matern agrees with the half-integer closed forms") {
    std::mt19937_64 rng(7);
    for (int dim : {1, 2}) {
        std::uniform_real_distribution<double> u(0.0, std::sqrt(static_cast<double>(dim)));
        for (double nu : {0.5, 1.5, 2.5}) {
            for (int i = 0; i < 1000; ++i) {
                double r = u(rng);
                if (r == 0.0) r = 1e-6;
                const double closed = *matern_half_integer(nu, 0.3, r);
                const double bessel = matern_bessel(nu, 0.3, r);
                CHECK(std::abs(bessel - closed) <= 1e-8 * std::abs(closed));
            }
        }
    }
    CHECK_FALSE(matern_half_integer(1.0, 1.0, 0.5).has_value());
}

TEST_CASE("gram matrices") {
    const auto se = KernelSpec::se(0.2, 2);
    std::vector<Point> one{Point::Constant(2, 0.3)};
    CHECK(gram(se, one)(0, 0) == 1.0);
    std::vector<Point> twins{Point::Constant(2, 0.3), Point::Constant(2, 0.3)};
    CHECK((gram(se, twins).array() == 1.0).all());

    std::mt19937_64 rng(3);
    const auto three = random_points(3, 2, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram(se, three));
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9);

    const auto many = random_points(500, 2, rng);
    for (auto spec : {KernelSpec::matern(2.5, 0.2, 2), KernelSpec::rq(1.0, 0.5, 2)}) {
        Eigen::MatrixXd g = gram(spec, many);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        g.diagonal().array() += 1e-10;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("Hoelder profiles") {
    const auto rq = holder_profile(KernelSpec::rq(1.0, 1.0, 1), 1.0, 100);
    CHECK(rq.k() == 0);
    CHECK(rq.alpha() == 1.0);
    CHECK(std::abs(rq.L() - std::sqrt(4.0 / 3.0)) < 1e-12);

    const auto ge = holder_profile(KernelSpec::ge(1.0, 1.0, 1), 1.0, 100);
    CHECK(ge.alpha() == 0.5);
    CHECK(std::abs(ge.L() - std::numbers::sqrt2) < 1e-12);

    for (double B : {1.0, 2.5}) {
        const auto pp = holder_profile(KernelSpec::pp(0, 1.0, 2), B, 100);
        CHECK(KernelSpec::pp(0, 1.0, 2).pp_exponent() == 2);
        CHECK(pp.alpha() == 0.5);
        CHECK(std::abs(pp.L() - 2.0 * B) < 1e-12);
    }

    const auto m = holder_profile(KernelSpec::matern(2.5, 0.2, 1), 1.0, 60);
    CHECK(m.k() == 2);
    CHECK(m.alpha() == doctest::Approx(0.5));
    CHECK(m.alpha1() == 1.0);
    CHECK(m.L() == doctest::Approx(std::log(60.0)));

    const auto m15 = holder_profile(KernelSpec::matern(1.5, 0.2, 1), 2.0, 10, 3.0);
    CHECK(m15.k() == 1);
    CHECK(m15.alpha() == doctest::Approx(0.5));
    CHECK(m15.L() == 3.0);

    const auto se = holder_profile(KernelSpec::se(0.2, 2), 1.0, 50);
    CHECK(se.k() == 1);
    CHECK(se.alpha() == 1.0);
    CHECK(holder_profile(KernelSpec::se(0.2, 1), 1.0, 50, std::numbers::sqrt2).L() ==
          std::numbers::sqrt2);
}

TEST_CASE("alpha1 equals max(alpha, min(1, k))") {
    for (int k = 0; k < 4; ++k)
        for (double a : {0.1, 0.5, 1.0}) {
            const SmoothnessProfile p(k, a, 1.0);
            CHECK(p.alpha1() == std::max(a, std::min(1.0, static_cast<double>(k))));
            CHECK(p.order() == k + a);
        }
}

TEST_CASE("embedding inequality on the example kernels") {
    check_embedding(KernelSpec::rq(1.0, 1.0, 1), 1);
    check_embedding(KernelSpec::ge(1.0, 1.0, 1), 2);
    check_embedding(KernelSpec::pp(0, 1.0, 2), 3);
    check_embedding(KernelSpec::rq(0.5, 1.0, 1), 4);
    check_embedding(KernelSpec::ge(2.0, 1.0, 1), 5);
    check_embedding(KernelSpec::ge(1.5, 0.5, 2), 6);
    check_embedding(KernelSpec::pp(1, 1.0, 1), 7);
    check_embedding(KernelSpec::pp(1, 0.5, 2), 8);
    CHECK_FALSE(holder_embedding(KernelSpec::se(1.0, 1)).has_value());
}

TEST_CASE("analytic information gain") {
    // Matern nu = 1, D = 1: exponent 2 / (2 + 2) = 1/2
    CHECK(info_gain_bound(KernelSpec::matern(1.0, 1.0, 1), 100, 0.1) ==
          doctest::Approx(std::sqrt(100.0) * std::log(100.0)));
    CHECK(info_gain_bound(KernelSpec::matern(2.5, 1.0, 2), 100, 0.1) ==
          doctest::Approx(std::pow(100.0, 6.0 / 11.0) * std::log(100.0)));
    CHECK(info_gain_bound(KernelSpec::se(1.0, 1), 3, 0.1) ==
          doctest::Approx(std::pow(std::log(3.0), 2.0)));
    CHECK(info_gain_bound(KernelSpec::se(1.0, 2), 50, 0.1) ==
          doctest::Approx(std::pow(std::log(50.0), 3.0)));
    CHECK_THROWS_AS(info_gain_bound(KernelSpec::rq(1.0, 1.0, 1), 10, 0.1), NoAnalyticBound);
    CHECK_THROWS_AS(info_gain_bound(KernelSpec::pp(0, 1.0, 1), 10, 0.1), NoAnalyticBound);
}

TEST_CASE("greedy information gain") {
    const double scale = 1.0 / (1.0 - std::exp(-1.0));
    const auto spec = KernelSpec::matern(2.5, 0.3, 1);
    const double sigma = 0.1;

    const auto grid = halton(20, 1);
    CHECK(greedy_info_gain(spec, grid, 1, sigma) ==
          doctest::Approx(scale * 0.5 * std::log(1.0 + 1.0 / (sigma * sigma))).epsilon(1e-12));

    std::vector<Point> pair{Point::Constant(1, 0.2), Point::Constant(1, 0.45)};
    const double k = spec(pair[0], pair[1]);
    const double s2 = sigma * sigma;
    const double det = (1.0 + 1.0 / s2) * (1.0 + 1.0 / s2) - (k / s2) * (k / s2);
    CHECK(greedy_info_gain(spec, pair, 2, sigma) ==
          doctest::Approx(scale * 0.5 * std::log(det)).epsilon(1e-10));

    std::mt19937_64 rng(11);
    const auto ten = random_points(10, 1, rng);
    for (int m : {2, 4, 6}) {
        const auto g = greedy_info_gain_detail(spec, ten, m, sigma);
        CHECK(g.mutual_information == doctest::Approx(mi_oracle(
                                          spec,
                                          [&] {
                                              std::vector<Point> s;
                                              for (auto i : g.selected) s.push_back(ten[i]);
                                              return s;
                                          }(),
                                          sigma)));
        std::vector<std::size_t> idx(10);
        std::iota(idx.begin(), idx.end(), 0);
        for (int trial = 0; trial < 100; ++trial) {
            std::shuffle(idx.begin(), idx.end(), rng);
            std::vector<Point> subset;
            for (int j = 0; j < m; ++j) subset.push_back(ten[idx[j]]);
            CHECK(g.gamma_bound >= mutual_information(spec, subset, sigma));
        }
    }

    CHECK_THROWS_AS(greedy_info_gain(spec, pair, 3, sigma), std::invalid_argument);
    CHECK_THROWS_AS(greedy_info_gain(spec, pair, 1, 0.0), std::invalid_argument);
}

TEST_CASE("rho0") {
    const SmoothnessProfile p(1, 1.0, 1.0);
    CHECK(rho0(p, std::sqrt(64.0), 64, 1) == doctest::Approx(1.0));
    CHECK(rho0(p, 1.0, 100, 1) == doctest::Approx(0.1));
    CHECK(rho0(p, 1e6, 100, 1) == 1.0);
}
