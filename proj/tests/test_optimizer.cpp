#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <doctest.h>

#include "lpgp/optimizer.hpp"

using namespace lpgp;

namespace {

OptimizerConfig manual_config(int n, int dim, SmoothnessProfile profile, double sigma,
                              double delta, double beta_n, double rho0) {
    return OptimizerConfig{
        .n = n,
        .spec = KernelSpec::matern(2.5, 0.2, dim),
        .B = 1.0,
        .profile = profile,
        .sigma = sigma,
        .delta = delta,
        .rho0 = rho0,
        .lambda = std::max(sigma * sigma, 1e-6),
        .gamma = 1.0,
        .beta_n = beta_n,
        .max_rounds = static_cast<std::size_t>(round_cap(n, dim)) + 16,
    };
}

OptimizerConfig matern_config(int n, int dim, double sigma, std::uint64_t seed,
                              std::optional<double> L = std::nullopt) {
    OptimizerOptions o;
    o.L = L;
    o.n = n;
    o.sigma = sigma;
    o.seed = seed;
    return build_config(KernelSpec::matern(2.5, 0.2, dim), o);
}

double bump(const Point& x) { return std::exp(-8.0 * (x.array() - 0.3).square().sum()); }

// Recomputes the guard that should have fired from the recorded terms.
Action expected_action(const RoundRecord& r, const OptimizerConfig& c) {
    const auto& p = c.profile;
    const double first = holder_inflation(p.L(), c.dim(), r.r_E, p.alpha1());
    const double full = holder_inflation(p.L(), c.dim(), r.r_E, p.order());
    if (r.beta_sigma < first && r.r_E >= c.rho0) return Action::ExpandFlag1a;
    if (r.b_t <= first && r.r_E >= c.rho0) return Action::ExpandFlag1b;
    if (r.b_t <= full && r.r_E * c.n >= 1.0 && r.r_E < c.rho0) return Action::ExpandFlag2;
    return Action::Evaluate;
}

}  // namespace

TEST_CASE("delta_t") {
    CHECK(delta_t(1, 1, std::numbers::pi * std::numbers::pi / 2.0, 1) == doctest::Approx(1.0));
    double sum = 0.0;
    for (std::size_t t = 1; t <= 200000; ++t) sum += delta_t(t, 7, 0.1, 2) * 49.0;
    CHECK(sum == doctest::Approx(0.1 / 3.0).epsilon(1e-4));
    for (std::size_t t = 1; t < 50; ++t) CHECK(delta_t(t + 1, 10, 0.1, 1) < delta_t(t, 10, 0.1, 1));
    CHECK_THROWS_AS(delta_t(0, 10, 0.1, 1), std::invalid_argument);
}

TEST_CASE("b_t") {
    const double e2 = std::exp(2.0);
    // delta = pi^2 / (2 e^2) makes delta_1 = e^-2 at n = 1
    const auto c = manual_config(1, 1, SmoothnessProfile(0, 1.0, 1.0), 1.0,
                                 std::numbers::pi * std::numbers::pi / (2.0 * e2), 1.0, 1.0);
    CHECK(b_t(4, 1, c) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b_t(16, 1, c) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::isinf(b_t(0, 1, c)));
}

TEST_CASE("ucb terms") {
    const auto c = manual_config(10, 1, SmoothnessProfile(0, 1.0, 1.0), 0.05, 0.1, 2.0, 0.5);

    const Cell root = Cell::unit(1);
    const auto fresh = ucb(root, Prediction{0.0, 1.0}, 1, c);
    CHECK(std::isinf(fresh.u2));
    CHECK(fresh.U == fresh.u1);
    CHECK(fresh.u1 == doctest::Approx(2.0 + 1.0));

    Cell cell;
    cell.lower = Point::Constant(1, 0.25);
    cell.upper = Point::Constant(1, 0.5);
    cell.nominal_side = 0.25;
    cell.add_observation(0.4);
    cell.add_observation(0.6);
    // choose sigma so that b_t = 0.1 for two observations in round 3
    auto c2 = c;
    c2.sigma = 0.1 / std::sqrt(2.0 * std::log(1.0 / delta_t(3, c.n, c.delta, 1)) / 2.0);
    const auto terms = ucb(cell, Prediction{0.3, 0.04}, 3, c2);
    CHECK(terms.b_t == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(terms.u2 == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(terms.u1 == doctest::Approx(0.3 + 2.0 * 0.2 + 0.25).epsilon(1e-12));

    cell.u0 = 0.1;
    CHECK(ucb(cell, Prediction{0.3, 0.04}, 3, c2).U == 0.1);

    const GpPosterior gp(c.spec, c.lambda);
    CHECK(ucb(root, Point::Constant(1, 0.3), gp, 1, c).u1 == fresh.u1);
}

TEST_CASE("flag 1 expansion") {
    const auto c = manual_config(10, 1, SmoothnessProfile(2, 0.5, 1.0), 0.05, 0.1, 2.0, 0.5);
    const auto e = expand_and_bound(Cell::unit(1), 1, 0.7, {}, 1, c);
    REQUIRE(e.children.size() == 2);
    CHECK(e.children[0].upper(0) == 0.5);
    for (const auto& k : e.children) CHECK(k.u0 == 0.7);

    Cell capped = Cell::unit(1);
    capped.u0 = 0.4;
    for (const auto& k : expand_and_bound(capped, 1, 0.7, {}, 1, c).children) CHECK(k.u0 == 0.4);
    CHECK_THROWS_AS(expand_and_bound(capped, 3, 0.7, {}, 1, c), std::invalid_argument);
}

TEST_CASE("flag 2 shrink radius") {
    const auto c = manual_config(10, 1, SmoothnessProfile(0, 1.0, 1.0), 0.05, 0.1, 2.0, 1.0);
    CHECK(shrink_radius(0.5, 0.1, c) == doctest::Approx(0.1));
    CHECK(shrink_radius(0.5, 10.0, c) == 0.25);
    CHECK(shrink_radius(0.5, 1e-9, c) == doctest::Approx(0.5 / 100.0));

    Cell half;
    half.lower = Point::Constant(1, 0.0);
    half.upper = Point::Constant(1, 0.5);
    half.nominal_side = 0.5;
    CHECK(partition(half, shrink_radius(0.5, 0.1, c)).size() == 5);
}

TEST_CASE("flag 2 expansion bounds children by the local estimate") {
    const auto c = manual_config(40, 1, SmoothnessProfile(0, 1.0, 1.0), 0.05, 0.1, 2.0, 1.0);
    Cell cell;
    cell.lower = Point::Constant(1, 0.5);
    cell.upper = Point::Constant(1, 0.75);
    cell.nominal_side = 0.25;
    cell.u0 = 5.0;
    Dataset data;
    for (int i = 0; i < 6; ++i) data.push_back({Point::Constant(1, 0.52 + 0.04 * i), 0.3});
    const auto e = expand_and_bound(cell, 2, 0.0, data, 4, c);
    // k = 0: uniform weights everywhere, so the candidate maximum is exact
    const double dt = delta_t(4, 40, 0.1, 1);
    const double err = 2.0 * 0.25 + 0.05 * std::sqrt(2.0 * std::log(2.0 / dt) / 6.0);
    CHECK(e.err == doctest::Approx(err).epsilon(1e-12));
    CHECK(e.r_next == 0.125);
    REQUIRE(e.children.size() == 2);
    for (const auto& k : e.children) {
        CHECK(k.u0 == doctest::Approx(0.3 + 2.0 * err).epsilon(1e-12));
        CHECK(k.u0 <= cell.u0);
    }

    cell.u0 = 0.1;
    for (const auto& k : expand_and_bound(cell, 2, 0.0, data, 4, c).children) CHECK(k.u0 == 0.1);
}

TEST_CASE("recommendation rule") {
    const auto c = manual_config(3, 1, SmoothnessProfile(0, 1.0, 1.0), 0.05, 0.1, 2.0, 1.0);
    std::vector<RoundRecord> trace(3);
    const double bs[] = {0.5, 0.2, 0.9};
    for (int i = 0; i < 3; ++i) {
        trace[i].t = i + 1;
        trace[i].x = Point::Constant(1, 0.1 * (i + 1));
        trace[i].beta_sigma = bs[i];
    }
    const std::vector<Cell> root{Cell::unit(1)};
    bool center = true;
    CHECK(recommend(root, trace, c, &center)(0) == doctest::Approx(0.2));
    CHECK_FALSE(center);

    auto fine = partition(Cell::unit(1), 0.1);
    fine[3] = partition(fine[3], 0.05)[0];
    fine[3].created_at = 2;
    CHECK(recommend(fine, trace, c, &center)(0) == doctest::Approx(0.325));
    CHECK(center);

    std::vector<RoundRecord> expansions(1);
    expansions[0].action = Action::ExpandFlag1a;
    CHECK_THROWS_AS(recommend(root, expansions, c), std::logic_error);
}

TEST_CASE("configuration") {
    const auto c = matern_config(60, 1, 0.05, 0);
    CHECK(c.profile.k() == 2);
    CHECK(c.profile.L() == doctest::Approx(std::log(60.0)));
    CHECK(c.lambda == doctest::Approx(0.0025));
    CHECK(c.gamma == doctest::Approx(info_gain_bound(c.spec, 60, 0.05)));
    CHECK(c.beta_n == doctest::Approx(beta(c.gamma, 1.0, 0.05, 0.1)));
    CHECK(c.rho0 >= 1.0 / 60.0);
    CHECK(c.rho0 <= 1.0);
    CHECK(c.max_rounds == 30 + 60 + 16);

    OptimizerOptions o;
    o.n = 20;
    o.delta = 1.5;
    CHECK_THROWS_AS(build_config(KernelSpec::se(0.2, 1), o), std::invalid_argument);
    o.delta = 0.1;
    o.rho0 = 0.01;
    CHECK_THROWS_AS(build_config(KernelSpec::se(0.2, 1), o), std::invalid_argument);
    o.rho0.reset();
    o.max_rounds = 5;
    CHECK_THROWS_AS(build_config(KernelSpec::se(0.2, 1), o), std::invalid_argument);

    OptimizerOptions rq;
    rq.n = 20;
    const auto cr = build_config(KernelSpec::rq(1.0, 0.5, 1), rq);
    CHECK(cr.gamma > 0.0);
    CHECK(cr.profile.k() == 0);
}

TEST_CASE("full runs") {
    for (int dim : {1, 2}) {
        for (double sigma : {0.05, 0.0}) {
            const auto c = matern_config(30, dim, sigma, 17);
            LpGpUcb opt(c);
            const auto run = opt.run(noisy_oracle(bump, sigma, 99));

            std::size_t evals = 0;
            std::mt19937_64 probe_rng(1);
            for (const auto& r : run.trace) {
                if (r.action == Action::Evaluate) {
                    ++evals;
                    CHECK(r.y.has_value());
                }
                CHECK(r.action == expected_action(r, c));
                if (r.action != Action::Evaluate) {
                    CHECK(r.r_E * c.n >= 1.0);
                }
            }
            CHECK(evals == 30);
            CHECK(opt.evaluations() == 30);
            CHECK(static_cast<double>(opt.rounds()) <= round_cap(30, dim));
            CHECK(opt.data().size() == 30);
            CHECK(check_tiling(opt.cells(), dim, 1000, probe_rng).ok());
            for (const auto& cell : opt.cells()) CHECK(cell.nominal_side >= 0.5 / (30.0 * 30.0));
            CHECK(run.recommendation.size() == dim);
            CHECK_THROWS_AS(opt.step(noisy_oracle(bump, sigma, 1)), std::logic_error);
        }
    }
}

TEST_CASE("runs are deterministic") {
    const auto c = matern_config(25, 2, 0.05, 5);
    LpGpUcb a(c), b(c);
    const auto ra = a.run(noisy_oracle(bump, 0.05, 3));
    const auto rb = b.run(noisy_oracle(bump, 0.05, 3));
    REQUIRE(ra.trace.size() == rb.trace.size());
    for (std::size_t i = 0; i < ra.trace.size(); ++i) {
        CHECK(ra.trace[i].x == rb.trace[i].x);
        CHECK(ra.trace[i].action == rb.trace[i].action);
        CHECK(ra.trace[i].ucb == rb.trace[i].ucb);
    }
    CHECK(ra.recommendation == rb.recommendation);
}

TEST_CASE("a single evaluation") {
    // the root stays whole exactly when beta_n >= L, which also puts L below xi
    const auto whole = matern_config(1, 1, 0.05, 0, 1.0);
    REQUIRE(whole.beta_n >= 1.0);
    LpGpUcb a(whole);
    const auto ra = a.run(noisy_oracle(bump, 0.05, 0));
    REQUIRE(ra.trace.size() == 1);
    CHECK(ra.trace[0].action == Action::Evaluate);
    CHECK(ra.xi == doctest::Approx(whole.beta_n));
    CHECK(ra.recommended_center);
    CHECK(ra.recommendation(0) == 0.5);

    const auto split = matern_config(1, 1, 0.05, 0, 2.0);
    REQUIRE(split.beta_n < 2.0);
    LpGpUcb b(split);
    const auto rb = b.run(noisy_oracle(bump, 0.05, 0));
    REQUIRE(rb.trace.size() == 2);
    CHECK(rb.trace[0].action == Action::ExpandFlag1a);
    CHECK(b.evaluations() == 1);
    CHECK(rb.recommended_center);
    CHECK(rb.recommendation(0) == 0.25);
}

TEST_CASE("expansion counts respect the per-cell bound") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto c = matern_config(60, 1, 0.05, seed);
        LpGpUcb opt(c);
        const auto run = opt.run(noisy_oracle(bump, 0.05, seed + 100));
        for (const auto& r : run.trace)
            if (r.action != Action::Evaluate)
                CHECK(static_cast<double>(r.n_E) <= evaluation_count_bound(c, r.r_E, r.action));
    }
}
