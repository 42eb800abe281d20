#include "lpgp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lpgp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kGoldenIterations = 24;

template <class Acq>
std::size_t best_index(std::span<const Point> pool, const GpPosterior& gp, Acq acq) {
    const std::vector<Prediction> preds = gp.predict(pool);
    std::vector<double> values(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        values[i] = acq(preds[i].mean, std::sqrt(preds[i].variance));
    return argmax(values);
}

// Golden-section search for a maximum of g on [a, b].
template <class G>
std::pair<double, double> golden_max(G g, double a, double b) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c);
    double gd = g(d);
    for (int it = 0; it < kGoldenIterations; ++it) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    return gc >= gd ? std::pair{c, gc} : std::pair{d, gd};
}

std::optional<Observation> best_observation(const Dataset& data) {
    if (data.empty()) return std::nullopt;
    const auto it = std::max_element(data.begin(), data.end(),
                                     [](const auto& a, const auto& b) { return a.y < b.y; });
    return *it;
}

Point max_mean_point(const GpPosterior& gp, const Dataset& data) {
    std::vector<Point> xs;
    xs.reserve(data.size());
    for (const auto& o : data) xs.push_back(o.x);
    const std::vector<Prediction> preds = gp.predict(xs);
    std::size_t best = 0;
    for (std::size_t i = 1; i < preds.size(); ++i)
        if (preds[i].mean > preds[best].mean) best = i;
    return xs[best];
}

RoundRecord evaluation_record(std::size_t t, const Point& x, double y) {
    RoundRecord rec;
    rec.t = t;
    rec.action = Action::Evaluate;
    rec.x = x;
    rec.y = y;
    rec.ucb = kNaN;
    rec.u1 = kNaN;
    rec.u2 = kNaN;
    rec.beta_sigma = kNaN;
    rec.b_t = kNaN;
    rec.r_E = kNaN;
    rec.evaluations = t;
    return rec;
}

struct Leaf {
    Point lower;
    Point upper;
    std::vector<std::size_t> idx;
};

struct Split {
    double gain = 0.0;
    int axis = -1;
    double threshold = 0.0;
};

Split best_split(const Leaf& leaf, std::span<const Observation> data, std::size_t min_leaf) {
    Split out;
    const std::size_t m = leaf.idx.size();
    if (m < 2 * min_leaf) return out;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i : leaf.idx) {
        sum += data[i].y;
        sum2 += data[i].y * data[i].y;
    }
    const double sse = sum2 - sum * sum / static_cast<double>(m);
    const double tol = 1e-12 * (1.0 + std::abs(sse));

    std::vector<std::size_t> order = leaf.idx;
    for (int axis = 0; axis < static_cast<int>(leaf.lower.size()); ++axis) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data[a].x(axis) < data[b].x(axis);
        });
        double ls = 0.0, ls2 = 0.0;
        for (std::size_t j = 1; j < m; ++j) {
            const double y = data[order[j - 1]].y;
            ls += y;
            ls2 += y * y;
            if (j < min_leaf || m - j < min_leaf) continue;
            const double lo = data[order[j - 1]].x(axis);
            const double hi = data[order[j]].x(axis);
            if (!(lo < hi)) continue;
            const double nl = static_cast<double>(j);
            const double nr = static_cast<double>(m - j);
            const double rs = sum - ls, rs2 = sum2 - ls2;
            const double child = (ls2 - ls * ls / nl) + (rs2 - rs * rs / nr);
            const double gain = sse - child;
            if (gain > tol && gain > out.gain) out = {gain, axis, 0.5 * (lo + hi)};
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(Algorithm algo) {
    switch (algo) {
        case Algorithm::LpGpUcb: return "lpgpucb";
        case Algorithm::Heuristic: return "heuristic";
        case Algorithm::IgpUcb: return "igpucb";
        case Algorithm::Ei: return "ei";
        case Algorithm::Pi: return "pi";
        case Algorithm::Random: return "random";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : {Algorithm::LpGpUcb, Algorithm::Heuristic, Algorithm::IgpUcb, Algorithm::Ei,
                        Algorithm::Pi, Algorithm::Random})
        if (to_string(a) == name) return a;
    throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::vector<Point> candidate_pool(const AcquisitionState& state, std::mt19937_64& rng) {
    const int dim = state.gp.spec().dim();
    const std::size_t size = std::max<std::size_t>(1, state.options.pool_size) *
                             static_cast<std::size_t>(dim);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Point shift(dim);
    for (int i = 0; i < dim; ++i) shift(i) = unif(rng);

    std::vector<Point> pool = halton(size, dim);
    for (Point& p : pool)
        for (int i = 0; i < dim; ++i) p(i) = std::fmod(p(i) + shift(i), 1.0);

    if (state.incumbent) {
        std::normal_distribution<double> jitter(0.0, state.options.perturbation_scale);
        for (std::size_t j = 0; j < state.options.perturbations; ++j) {
            Point p = state.incumbent->x;
            for (int i = 0; i < dim; ++i) p(i) = std::clamp(p(i) + jitter(rng), 0.0, 1.0);
            pool.push_back(std::move(p));
        }
    }
    return pool;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mu, double s, double best, double xi) {
    const double gap = mu - best - xi;
    if (!(s > 0.0)) return std::max(gap, 0.0);
    const double z = gap / s;
    return gap * normal_cdf(z) + s * normal_pdf(z);
}

double probability_of_improvement(double mu, double s, double best, double xi) {
    const double gap = mu - best - xi;
    if (!(s > 0.0)) return gap > 0.0 ? 1.0 : (gap == 0.0 ? 0.5 : 0.0);
    return normal_cdf(gap / s);
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax of an empty set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

std::size_t argmax_ucb(std::span<const Prediction> preds, double beta) {
    std::vector<double> values(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        values[i] = preds[i].mean + beta * std::sqrt(preds[i].variance);
    return argmax(values);
}

Point igp_ucb_step(const AcquisitionState& state, double beta, std::mt19937_64& rng) {
    const std::vector<Point> pool = candidate_pool(state, rng);
    const std::vector<Prediction> preds = state.gp.predict(pool);
    Point x = pool[argmax_ucb(preds, beta)];

    auto acq = [&](const Point& p) {
        const Prediction pr = state.gp.predict(p);
        return pr.mean + beta * std::sqrt(pr.variance);
    };
    double current = acq(x);
    const double half = 1.0 / static_cast<double>(std::max<std::size_t>(1, state.options.pool_size));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double a = std::max(0.0, x(i) - half);
        const double b = std::min(1.0, x(i) + half);
        Point probe = x;
        const auto [s, value] = golden_max(
            [&](double v) {
                probe(i) = v;
                return acq(probe);
            },
            a, b);
        if (value > current) {
            x(i) = s;
            current = value;
        }
    }
    return x;
}

Point ei_step(const AcquisitionState& state, double xi_jitter, std::mt19937_64& rng) {
    if (!state.incumbent) return random_step(state.gp.spec().dim(), rng);
    const std::vector<Point> pool = candidate_pool(state, rng);
    const double best = state.incumbent->y;
    return pool[best_index(pool, state.gp, [&](double mu, double s) {
        return expected_improvement(mu, s, best, xi_jitter);
    })];
}

Point pi_step(const AcquisitionState& state, double xi_jitter, std::mt19937_64& rng) {
    if (!state.incumbent) return random_step(state.gp.spec().dim(), rng);
    const std::vector<Point> pool = candidate_pool(state, rng);
    const double best = state.incumbent->y;
    return pool[best_index(pool, state.gp, [&](double mu, double s) {
        return probability_of_improvement(mu, s, best, xi_jitter);
    })];
}

Point random_step(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Point x(dim);
    for (int i = 0; i < dim; ++i) x(i) = unif(rng);
    return x;
}

TreePartitioner fit_tree(std::span<const Observation> data, int dim, std::size_t max_leaves,
                         std::size_t min_samples_leaf) {
    if (data.empty()) throw std::invalid_argument("fit_tree needs at least one observation");
    const std::size_t min_leaf = std::max<std::size_t>(1, min_samples_leaf);

    std::vector<Leaf> leaves(1);
    leaves[0].lower = Point::Zero(dim);
    leaves[0].upper = Point::Ones(dim);
    leaves[0].idx.resize(data.size());
    std::iota(leaves[0].idx.begin(), leaves[0].idx.end(), std::size_t{0});

    while (leaves.size() < max_leaves) {
        Split best;
        std::size_t which = 0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            const Split s = best_split(leaves[l], data, min_leaf);
            if (s.axis >= 0 && s.gain > best.gain) {
                best = s;
                which = l;
            }
        }
        if (best.axis < 0) break;

        Leaf right;
        Leaf& left = leaves[which];
        right.lower = left.lower;
        right.upper = left.upper;
        right.lower(best.axis) = best.threshold;
        std::vector<std::size_t> keep;
        for (std::size_t i : left.idx)
            (data[i].x(best.axis) < best.threshold ? keep : right.idx).push_back(i);
        left.idx = std::move(keep);
        left.upper(best.axis) = best.threshold;
        leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(which) + 1, std::move(right));
    }

    TreePartitioner out;
    out.leaves.reserve(leaves.size());
    for (const Leaf& l : leaves) {
        Cell c;
        c.lower = l.lower;
        c.upper = l.upper;
        c.nominal_side = c.max_side();
        for (std::size_t i : l.idx) c.add_observation(data[i].y);
        out.leaves.push_back(std::move(c));
    }
    return out;
}

RunResult heuristic_run(const Oracle& oracle, const OptimizerConfig& config,
                        const BaselineOptions& options) {
    config.validate();
    OptimizerConfig cfg = config;
    cfg.profile = SmoothnessProfile(0, options.heuristic_alpha, config.profile.L());

    std::mt19937_64 rng(cfg.seed);
    GpPosterior gp(cfg.spec, cfg.lambda);
    Dataset data;
    std::vector<Cell> leaves{Cell::unit(cfg.dim())};
    RunResult out;
    out.xi = std::numeric_limits<double>::infinity();

    for (std::size_t t = 1; t <= static_cast<std::size_t>(cfg.n); ++t) {
        std::vector<Point> candidates;
        candidates.reserve(leaves.size());
        for (const Cell& c : leaves) candidates.push_back(sample_uniform(c, rng));
        const std::vector<Prediction> preds = gp.predict(candidates);

        std::size_t sel = 0;
        UcbTerms best = ucb(leaves[0], preds[0], t, cfg);
        for (std::size_t i = 1; i < leaves.size(); ++i) {
            const UcbTerms u = ucb(leaves[i], preds[i], t, cfg);
            if (u.U > best.U) {
                best = u;
                sel = i;
            }
        }

        const Point& x = candidates[sel];
        const double y = oracle(x);
        RoundRecord rec = evaluation_record(t, x, y);
        rec.ucb = best.U;
        rec.u1 = best.u1;
        rec.u2 = best.u2;
        rec.beta_sigma = best.beta_sigma;
        rec.b_t = best.b_t;
        rec.r_E = leaves[sel].nominal_side;
        rec.n_E = leaves[sel].n_obs;
        rec.cell_lower = leaves[sel].lower;
        rec.cell_upper = leaves[sel].upper;
        if (best.beta_sigma < out.xi) {
            out.xi = best.beta_sigma;
            out.recommendation = x;
        }

        gp = gp.update(x, y);
        data.push_back({x, y});
        const std::size_t max_leaves =
            options.max_leaves.value_or(std::max<std::size_t>(2, (data.size() + 2) / 3));
        leaves = fit_tree(data, cfg.dim(), max_leaves, options.min_samples_leaf).leaves;
        rec.partition_size = leaves.size();
        out.trace.push_back(std::move(rec));
    }
    return out;
}

RunResult baseline_run(Algorithm algo, const Oracle& oracle, const OptimizerConfig& config,
                       const BaselineOptions& options) {
    if (algo == Algorithm::LpGpUcb || algo == Algorithm::Heuristic)
        throw std::invalid_argument("baseline_run handles IGP-UCB, EI, PI and random search");
    config.validate();
    std::mt19937_64 rng(config.seed);
    GpPosterior gp(config.spec, config.lambda);
    Dataset data;
    RunResult out;

    for (std::size_t t = 1; t <= static_cast<std::size_t>(config.n); ++t) {
        Point x;
        const AcquisitionState state{gp, best_observation(data), options};
        switch (algo) {
            case Algorithm::IgpUcb: x = igp_ucb_step(state, config.beta_n, rng); break;
            case Algorithm::Ei: x = ei_step(state, options.xi_jitter, rng); break;
            case Algorithm::Pi: x = pi_step(state, options.xi_jitter, rng); break;
            default: x = random_step(config.dim(), rng); break;
        }
        const double y = oracle(x);
        RoundRecord rec = evaluation_record(t, x, y);
        if (algo != Algorithm::Random) {
            const Prediction p = gp.predict(x);
            rec.beta_sigma = config.beta_n * std::sqrt(p.variance);
            if (algo == Algorithm::IgpUcb) rec.ucb = p.mean + rec.beta_sigma;
            gp = gp.update(x, y);
        }
        data.push_back({x, y});
        out.trace.push_back(std::move(rec));
    }

    if (algo == Algorithm::Random)
        out.recommendation = best_observation(data)->x;
    else
        out.recommendation = max_mean_point(gp, data);
    return out;
}

RunResult run_algorithm(Algorithm algo, const Oracle& oracle, const OptimizerConfig& config,
                        const BaselineOptions& options) {
    switch (algo) {
        case Algorithm::LpGpUcb: {
            LpGpUcb opt(config);
            return opt.run(oracle);
        }
        case Algorithm::Heuristic: return heuristic_run(oracle, config, options);
        default: return baseline_run(algo, oracle, config, options);
    }
}

}  // namespace lpgp
