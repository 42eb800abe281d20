#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "lpgp/geometry.hpp"
#include "lpgp/gp.hpp"
#include "lpgp/kernels.hpp"
#include "lpgp/local_poly.hpp"
#include "lpgp/types.hpp"

namespace lpgp {

/// Returns a (possibly noisy) observation of the objective at x.
using Oracle = std::function<double(const Point&)>;

enum class Action { Evaluate, ExpandFlag1a, ExpandFlag1b, ExpandFlag2 };

std::string_view to_string(Action action);

struct OptimizerConfig {
    int n = 0;
    KernelSpec spec;
    double B = 1.0;
    SmoothnessProfile profile;
    double sigma = 0.0;
    double delta = 0.1;
    double rho0 = 1.0;
    double lambda = 1.0;
    double gamma = 0.0;
    double beta_n = 1.0;
    std::size_t max_rounds = 0;
    std::size_t candidate_set_size = 64;
    std::uint64_t seed = 0;

    int dim() const { return spec.dim(); }
    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// User-level inputs from which a full configuration is derived.
struct OptimizerOptions {
    int n = 0;
    double B = 1.0;
    double sigma = 0.05;
    double delta = 0.1;
    std::optional<double> L;
    std::optional<int> k;
    std::optional<double> alpha;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::optional<double> rho0;
    std::optional<std::size_t> max_rounds;
    std::size_t candidate_set_size = 64;
    /// Grid size for the greedy information-gain estimate; 0 picks max(256, 4n).
    std::size_t gamma_grid_size = 0;
    std::uint64_t seed = 0;
};

/// Fills in the Hoelder profile, gamma, beta_n, rho0, lambda and the round cap.
OptimizerConfig build_config(const KernelSpec& spec, const OptimizerOptions& options);

/// gamma for the budget: the analytic bound when one exists, else the greedy estimate.
double budget_info_gain(const KernelSpec& spec, int n, double sigma, std::size_t grid_size = 0);

/// T_n = (n/2)^D + n, the bound on the number of rounds.
double round_cap(int n, int dim);

/// 2 delta / (n^D pi^2 t^2).
double delta_t(std::size_t t, int n, double delta, int dim);

/// sigma sqrt(2 log(1/delta_t) / n_E); +inf for an empty cell.
double b_t(std::size_t n_E, std::size_t t, const OptimizerConfig& config);
inline double b_t(const Cell& cell, std::size_t t, const OptimizerConfig& config) {
    return b_t(cell.n_obs, t, config);
}

/// L (sqrt(D) r)^p.
double holder_inflation(double L, int dim, double r, double exponent);

struct UcbTerms {
    double U;
    double u1;
    double u2;
    double beta_sigma;
    double b_t;
};

UcbTerms ucb(const Cell& cell, const Prediction& pred, std::size_t t,
             const OptimizerConfig& config);
UcbTerms ucb(const Cell& cell, const Point& x, const GpPosterior& gp, std::size_t t,
             const OptimizerConfig& config);

struct Expansion {
    std::vector<Cell> children;
    double err = 0.0;     ///< MaxErr for flag 2, 0 otherwise
    double r_next = 0.0;  ///< nominal side of the children
};

/// Side of the flag-2 children: min{r_E/2, (err/L)^{1/alpha1}/sqrt(D)}, floored at 1/(2n^2).
double shrink_radius(double r_E, double err, const OptimizerConfig& config);

/// Refines a cell. Flag 2 needs the observations of the cell in `data`.
Expansion expand_and_bound(const Cell& cell, int flag, double val,
                           std::span<const Observation> data, std::size_t t,
                           const OptimizerConfig& config);

/// Ceiling-plus-one bound on the observations a cell can hold when it is expanded.
double evaluation_count_bound(const OptimizerConfig& config, double r_E, Action action);

struct RoundRecord {
    std::size_t t = 0;
    Action action = Action::Evaluate;
    std::uint64_t cell_id = 0;
    Point x;
    std::optional<double> y;
    double ucb = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    double beta_sigma = 0.0;
    double b_t = 0.0;
    std::size_t partition_size = 0;  ///< after the round
    std::size_t evaluations = 0;     ///< after the round
    double r_E = 0.0;
    std::size_t n_E = 0;
    Point cell_lower;
    Point cell_upper;
};

struct RunResult {
    Point recommendation;
    bool recommended_center = false;
    double xi = std::numeric_limits<double>::infinity();
    std::vector<RoundRecord> trace;
};

/// Recommendation rule over a final partition and the rounds that produced it.
/// Throws std::logic_error when the trace holds no evaluation.
Point recommend(std::span<const Cell> partition, std::span<const RoundRecord> trace,
                const OptimizerConfig& config, bool* center = nullptr);

/// The LP-GP-UCB optimizer. One instance owns its partition, GP and RNG.
class LpGpUcb {
public:
    explicit LpGpUcb(OptimizerConfig config);

    bool done() const { return evaluations_ >= static_cast<std::size_t>(config_.n); }
    RoundRecord step(const Oracle& oracle);
    RunResult run(const Oracle& oracle);
    Point recommend() const;
    /// True when recommend() returns the center of the smallest cell.
    bool recommends_center() const;

    const OptimizerConfig& config() const { return config_; }
    std::size_t rounds() const { return t_; }
    std::size_t evaluations() const { return evaluations_; }
    double xi() const { return xi_; }
    const GpPosterior& gp() const { return gp_; }
    const std::vector<RoundRecord>& trace() const { return trace_; }
    const Dataset& data() const { return data_; }
    std::vector<Cell> cells() const;

private:
    struct Node {
        Cell cell;
        std::uint64_t id;
        std::vector<std::size_t> obs;
    };

    std::size_t owner_of(const Point& x) const;
    void replace(std::size_t index, std::vector<Cell> children);

    OptimizerConfig config_;
    std::mt19937_64 rng_;
    GpPosterior gp_;
    std::vector<Node> nodes_;
    Dataset data_;
    std::uint64_t next_id_ = 0;
    std::size_t t_ = 0;
    std::size_t evaluations_ = 0;
    double xi_ = std::numeric_limits<double>::infinity();
    std::vector<RoundRecord> trace_;
};

/// Objective plus Gaussian(0, sigma^2) noise drawn from a dedicated stream.
Oracle noisy_oracle(std::function<double(const Point&)> f, double sigma, std::uint64_t seed);

}  // namespace lpgp
