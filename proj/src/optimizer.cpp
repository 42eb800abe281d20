#include "lpgp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lpgp {

namespace {

// Stand-in noise scale for the greedy gain estimate in the noiseless case.
constexpr double kMinGreedySigma = 1e-3;
constexpr double kMinLambda = 1e-6;

bool lex_less(const Point& a, const Point& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
    }
    return false;
}

// Selection order: larger U first, then older cells, then smaller lower corner.
bool better(double ua, const Cell& a, double ub, const Cell& b) {
    if (ua != ub) return ua > ub;
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return lex_less(a.lower, b.lower);
}

}  // namespace

std::string_view to_string(Action action) {
    switch (action) {
        case Action::Evaluate: return "Evaluate";
        case Action::ExpandFlag1a: return "ExpandFlag1a";
        case Action::ExpandFlag1b: return "ExpandFlag1b";
        case Action::ExpandFlag2: return "ExpandFlag2";
    }
    return "Unknown";
}

void OptimizerConfig::validate() const {
    if (n < 1) throw std::invalid_argument("budget n must be >= 1");
    if (!(B >= 0.0)) throw std::invalid_argument("B must be non-negative");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(rho0 <= 1.0) || !(rho0 * n >= 1.0 - 1e-12))
        throw std::invalid_argument("rho0 must lie in [1/n, 1]");
    if (!(beta_n >= 0.0) || !std::isfinite(beta_n))
        throw std::invalid_argument("beta_n must be finite and non-negative");
    if (static_cast<double>(max_rounds) < round_cap(n, dim()))
        throw std::invalid_argument("max_rounds must be at least (n/2)^D + n");
    if (candidate_set_size < 1) throw std::invalid_argument("candidate_set_size must be >= 1");
}

double round_cap(int n, int dim) { return std::pow(0.5 * n, dim) + n; }

double budget_info_gain(const KernelSpec& spec, int n, double sigma, std::size_t grid_size) {
    try {
        return info_gain_bound(spec, n, sigma);
    } catch (const NoAnalyticBound&) {
        const std::size_t size =
            grid_size > 0 ? grid_size : std::max<std::size_t>(256, 4 * static_cast<std::size_t>(n));
        const std::vector<Point> grid = halton(size, spec.dim());
        return greedy_info_gain(spec, grid, n, std::max(sigma, kMinGreedySigma));
    }
}

OptimizerConfig build_config(const KernelSpec& spec, const OptimizerOptions& o) {
    if (o.n < 1) throw std::invalid_argument("budget n must be >= 1");
    const SmoothnessProfile base = holder_profile(spec, o.B, o.n, o.L);
    const SmoothnessProfile profile(o.k.value_or(base.k()), o.alpha.value_or(base.alpha()),
                                    base.L());
    const double gamma = o.gamma ? *o.gamma : budget_info_gain(spec, o.n, o.sigma, o.gamma_grid_size);
    const double floor = 1.0 / o.n;
    double r0 = o.rho0 ? *o.rho0 : std::max(floor, rho0(profile, gamma, o.n, spec.dim()));
    const auto cap = static_cast<std::size_t>(std::floor(round_cap(o.n, spec.dim()))) + 16;
    OptimizerConfig c{
        .n = o.n,
        .spec = spec,
        .B = o.B,
        .profile = profile,
        .sigma = o.sigma,
        .delta = o.delta,
        .rho0 = r0,
        .lambda = o.lambda.value_or(std::max(o.sigma * o.sigma, kMinLambda)),
        .gamma = gamma,
        .beta_n = 0.0,
        .max_rounds = o.max_rounds.value_or(cap),
        .candidate_set_size = o.candidate_set_size,
        .seed = o.seed,
    };
    if (!(o.delta > 0.0 && o.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    c.beta_n = beta(gamma, o.B, o.sigma, o.delta);
    c.validate();
    return c;
}

double delta_t(std::size_t t, int n, double delta, int dim) {
    if (t < 1) throw std::invalid_argument("round index must be >= 1");
    const double td = static_cast<double>(t);
    return 2.0 * delta / (std::pow(static_cast<double>(n), dim) * std::numbers::pi *
                          std::numbers::pi * td * td);
}

double b_t(std::size_t n_E, std::size_t t, const OptimizerConfig& config) {
    if (n_E == 0) return std::numeric_limits<double>::infinity();
    const double dt = delta_t(t, config.n, config.delta, config.dim());
    return config.sigma * std::sqrt(2.0 * std::log(1.0 / dt) / static_cast<double>(n_E));
}

double holder_inflation(double L, int dim, double r, double exponent) {
    return L * std::pow(std::sqrt(static_cast<double>(dim)) * r, exponent);
}

UcbTerms ucb(const Cell& cell, const Prediction& pred, std::size_t t,
             const OptimizerConfig& config) {
    const double inflate =
        holder_inflation(config.profile.L(), config.dim(), cell.nominal_side,
                         config.profile.alpha1());
    UcbTerms out;
    out.beta_sigma = config.beta_n * std::sqrt(pred.variance);
    out.b_t = b_t(cell, t, config);
    out.u1 = pred.mean + out.beta_sigma + inflate;
    out.u2 = cell.n_obs == 0 ? std::numeric_limits<double>::infinity()
                             : cell.empirical_mean() + out.b_t + inflate;
    out.U = std::min({cell.u0, out.u1, out.u2});
    return out;
}

UcbTerms ucb(const Cell& cell, const Point& x, const GpPosterior& gp, std::size_t t,
             const OptimizerConfig& config) {
    return ucb(cell, gp.predict(x), t, config);
}

double shrink_radius(double r_E, double err, const OptimizerConfig& config) {
    const SmoothnessProfile& p = config.profile;
    const double shrink =
        std::pow(err / p.L(), 1.0 / p.alpha1()) / std::sqrt(static_cast<double>(config.dim()));
    const double floor = 0.5 / (static_cast<double>(config.n) * config.n);
    return std::max(std::min(0.5 * r_E, shrink), floor);
}

Expansion expand_and_bound(const Cell& cell, int flag, double val,
                           std::span<const Observation> data, std::size_t t,
                           const OptimizerConfig& config) {
    if (flag != 1 && flag != 2) throw std::invalid_argument("expansion flag must be 1 or 2");
    Expansion out;
    if (flag == 1 || data.empty()) {
        out.r_next = 0.5 * cell.nominal_side;
        out.children = partition(cell, out.r_next);
        for (Cell& c : out.children) c.u0 = std::min(cell.u0, val);
        return out;
    }

    const SmoothnessProfile& p = config.profile;
    const double dt = delta_t(t, config.n, config.delta, config.dim());
    out.err = max_err(cell, data, p, config.sigma, dt, config.candidate_set_size);
    out.r_next = shrink_radius(cell.nominal_side, out.err, config);
    out.children = partition(cell, out.r_next);

    std::vector<Point> xs;
    xs.reserve(data.size());
    for (const auto& o : data) xs.push_back(o.x);
    const LocalPolyRule rule(xs, cell, p.k());
    for (Cell& c : out.children) {
        const LpWeights w = rule.weights(c.center());
        double f_hat = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            f_hat += w.weights(static_cast<Eigen::Index>(i)) * data[i].y;
        c.u0 = std::min(cell.u0, f_hat + 2.0 * out.err);
    }
    return out;
}

double evaluation_count_bound(const OptimizerConfig& config, double r_E, Action action) {
    if (action == Action::Evaluate) return std::numeric_limits<double>::infinity();
    const double exponent =
        action == Action::ExpandFlag2 ? 2.0 * config.profile.order() : 2.0 * config.profile.alpha1();
    const auto t_cap = static_cast<std::size_t>(std::ceil(round_cap(config.n, config.dim())));
    const double log_term = std::log(1.0 / delta_t(t_cap, config.n, config.delta, config.dim()));
    const double L = config.profile.L();
    return std::ceil(2.0 * log_term / (L * L * config.dim() * std::pow(r_E, exponent))) + 1.0;
}

Point recommend(std::span<const Cell> partition, std::span<const RoundRecord> trace,
                const OptimizerConfig& config, bool* center) {
    const RoundRecord* tau = nullptr;
    for (const RoundRecord& r : trace)
        if (r.action == Action::Evaluate && (!tau || r.beta_sigma < tau->beta_sigma)) tau = &r;
    if (!tau) throw std::logic_error("no evaluations to recommend from");
    if (partition.empty()) throw std::invalid_argument("empty partition");

    std::size_t best = 0;
    for (std::size_t i = 1; i < partition.size(); ++i) {
        const Cell& a = partition[i];
        const Cell& b = partition[best];
        if (a.nominal_side != b.nominal_side) {
            if (a.nominal_side < b.nominal_side) best = i;
        } else if (a.created_at != b.created_at) {
            if (a.created_at < b.created_at) best = i;
        } else if (lex_less(a.lower, b.lower)) {
            best = i;
        }
    }
    const SmoothnessProfile& p = config.profile;
    const bool use_center = holder_inflation(p.L(), config.dim(), partition[best].nominal_side,
                                             p.alpha1()) <= tau->beta_sigma;
    if (center) *center = use_center;
    return use_center ? partition[best].center() : tau->x;
}

LpGpUcb::LpGpUcb(OptimizerConfig config)
    : config_(std::move(config)), rng_(config_.seed), gp_(config_.spec, config_.lambda) {
    config_.validate();
    nodes_.push_back({Cell::unit(config_.dim()), next_id_++, {}});
}

std::vector<Cell> LpGpUcb::cells() const {
    std::vector<Cell> out;
    out.reserve(nodes_.size());
    for (const Node& n : nodes_) out.push_back(n.cell);
    return out;
}

std::size_t LpGpUcb::owner_of(const Point& x) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (owns(nodes_[i].cell, x)) return i;
    // Rounding at a shared face: fall back to the nearest cell center.
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double d = (nodes_[i].cell.center() - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

void LpGpUcb::replace(std::size_t index, std::vector<Cell> children) {
    Node parent = std::move(nodes_[index]);
    nodes_.erase(nodes_.begin() + static_cast<std::ptrdiff_t>(index));
    const std::size_t first = nodes_.size();
    for (Cell& c : children) {
        c.created_at = t_;
        nodes_.push_back({std::move(c), next_id_++, {}});
    }
    for (std::size_t obs : parent.obs) {
        const Point& x = data_[obs].x;
        std::size_t target = first;
        while (target < nodes_.size() && !owns(nodes_[target].cell, x)) ++target;
        if (target == nodes_.size()) {
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t i = first; i < nodes_.size(); ++i) {
                const double d = (nodes_[i].cell.center() - x).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    target = i;
                }
            }
        }
        nodes_[target].obs.push_back(obs);
        nodes_[target].cell.add_observation(data_[obs].y);
    }
}

RoundRecord LpGpUcb::step(const Oracle& oracle) {
    if (done()) throw std::logic_error("evaluation budget already spent");
    if (t_ >= config_.max_rounds) {
        std::ostringstream msg;
        msg << "round cap exceeded: " << t_ << " rounds, " << evaluations_ << " of " << config_.n
            << " evaluations, " << nodes_.size() << " active cells";
        throw std::runtime_error(msg.str());
    }
    ++t_;

    std::vector<Point> candidates;
    candidates.reserve(nodes_.size());
    for (const Node& node : nodes_) candidates.push_back(sample_uniform(node.cell, rng_));
    const std::vector<Prediction> preds = gp_.predict(candidates);

    std::size_t sel = 0;
    UcbTerms best = ucb(nodes_[0].cell, preds[0], t_, config_);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const UcbTerms u = ucb(nodes_[i].cell, preds[i], t_, config_);
        if (better(u.U, nodes_[i].cell, best.U, nodes_[sel].cell)) {
            best = u;
            sel = i;
        }
    }

    const Cell& cell = nodes_[sel].cell;
    const double r = cell.nominal_side;
    const SmoothnessProfile& p = config_.profile;
    const double first_order = holder_inflation(p.L(), config_.dim(), r, p.alpha1());
    const double full_order = holder_inflation(p.L(), config_.dim(), r, p.order());

    RoundRecord rec;
    rec.t = t_;
    rec.cell_id = nodes_[sel].id;
    rec.x = candidates[sel];
    rec.ucb = best.U;
    rec.u1 = best.u1;
    rec.u2 = best.u2;
    rec.beta_sigma = best.beta_sigma;
    rec.b_t = best.b_t;
    rec.r_E = r;
    rec.n_E = cell.n_obs;
    rec.cell_lower = cell.lower;
    rec.cell_upper = cell.upper;

    int flag = 0;
    double val = std::numeric_limits<double>::infinity();
    if (best.beta_sigma < first_order && r >= config_.rho0) {
        rec.action = Action::ExpandFlag1a;
        flag = 1;
        val = best.u1;
    } else if (best.b_t <= first_order && r >= config_.rho0) {
        rec.action = Action::ExpandFlag1b;
        flag = 1;
        val = best.u2;
    } else if (best.b_t <= full_order && r * config_.n >= 1.0 && r < config_.rho0) {
        rec.action = Action::ExpandFlag2;
        flag = 2;
    }

    if (flag != 0) {
        Dataset local;
        local.reserve(nodes_[sel].obs.size());
        for (std::size_t i : nodes_[sel].obs) local.push_back(data_[i]);
        Expansion e = expand_and_bound(cell, flag, val, local, t_, config_);
        replace(sel, std::move(e.children));
    } else {
        rec.action = Action::Evaluate;
        const double y = oracle(rec.x);
        rec.y = y;
        xi_ = std::min(xi_, best.beta_sigma);
        gp_ = gp_.update(rec.x, y);
        data_.push_back({rec.x, y});
        const std::size_t owner = owns(cell, rec.x) ? sel : owner_of(rec.x);
        nodes_[owner].obs.push_back(data_.size() - 1);
        nodes_[owner].cell.add_observation(y);
        ++evaluations_;
    }
    rec.partition_size = nodes_.size();
    rec.evaluations = evaluations_;
    trace_.push_back(rec);
    return rec;
}

bool LpGpUcb::recommends_center() const {
    bool center = false;
    const std::vector<Cell> c = cells();
    lpgp::recommend(c, trace_, config_, &center);
    return center;
}

Point LpGpUcb::recommend() const {
    const std::vector<Cell> c = cells();
    return lpgp::recommend(c, trace_, config_);
}

RunResult LpGpUcb::run(const Oracle& oracle) {
    while (!done()) step(oracle);
    RunResult out;
    out.recommendation = recommend();
    out.recommended_center = recommends_center();
    out.xi = xi_;
    out.trace = trace_;
    return out;
}

Oracle noisy_oracle(std::function<double(const Point&)> f, double sigma, std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [f = std::move(f), sigma, rng](const Point& x) {
        const double value = f(x);
        if (sigma == 0.0) return value;
        std::normal_distribution<double> noise(0.0, sigma);
        return value + noise(*rng);
    };
}

}  // namespace lpgp
