#pragma once

#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "lpgp/geometry.hpp"
#include "lpgp/gp.hpp"
#include "lpgp/optimizer.hpp"
#include "lpgp/types.hpp"

namespace lpgp {

enum class Algorithm { LpGpUcb, Heuristic, IgpUcb, Ei, Pi, Random };

std::string_view to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

struct BaselineOptions {
    std::size_t pool_size = 500;
    double xi_jitter = 0.01;
    std::size_t perturbations = 16;      ///< pool points scattered around the incumbent
    double perturbation_scale = 0.05;
    std::size_t min_samples_leaf = 2;
    std::optional<std::size_t> max_leaves;  ///< default max(2, ceil(n_e / 3))
    double heuristic_alpha = 1.0;
};

/// What the acquisition maximizers see in one round.
struct AcquisitionState {
    const GpPosterior& gp;
    std::optional<Observation> incumbent;  ///< best observation so far
    const BaselineOptions& options;
};

/// Halton points under a random shift modulo 1, plus clamped Gaussian
/// perturbations of the incumbent. Every point lies in [0,1]^D.
std::vector<Point> candidate_pool(const AcquisitionState& state, std::mt19937_64& rng);

double normal_pdf(double z);
double normal_cdf(double z);

/// (mu - best - xi) Phi(z) + s phi(z), with the s = 0 limit max(mu - best - xi, 0).
double expected_improvement(double mu, double s, double best, double xi);
/// Phi((mu - best - xi) / s), with the s = 0 limit as a step function.
double probability_of_improvement(double mu, double s, double best, double xi);

/// Index of the first maximizer of mu + beta * sqrt(var).
std::size_t argmax_ucb(std::span<const Prediction> preds, double beta);
/// Index of the first maximum.
std::size_t argmax(std::span<const double> values);

Point igp_ucb_step(const AcquisitionState& state, double beta, std::mt19937_64& rng);
Point ei_step(const AcquisitionState& state, double xi_jitter, std::mt19937_64& rng);
Point pi_step(const AcquisitionState& state, double xi_jitter, std::mt19937_64& rng);
Point random_step(int dim, std::mt19937_64& rng);

/// Axis-aligned regression tree whose leaves partition [0,1]^D.
struct TreePartitioner {
    std::vector<Cell> leaves;  ///< n_obs and sum_y hold the samples routed to each leaf
};

/// Greedy CART with midpoint thresholds; splits the leaf whose best split
/// reduces the squared error most until max_leaves or no admissible split.
TreePartitioner fit_tree(std::span<const Observation> data, int dim, std::size_t max_leaves,
                         std::size_t min_samples_leaf);

/// Regression-tree variant: k = 0, no expansion guards, always evaluates.
RunResult heuristic_run(const Oracle& oracle, const OptimizerConfig& config,
                        const BaselineOptions& options = {});

/// Runs IGP-UCB, EI, PI or random search for config.n evaluations.
RunResult baseline_run(Algorithm algo, const Oracle& oracle, const OptimizerConfig& config,
                       const BaselineOptions& options = {});

/// Dispatches any algorithm, LP-GP-UCB included.
RunResult run_algorithm(Algorithm algo, const Oracle& oracle, const OptimizerConfig& config,
                        const BaselineOptions& options = {});

}  // namespace lpgp
