#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lpgp/baselines.hpp"
#include "lpgp/kernels.hpp"
#include "lpgp/optimizer.hpp"
#include "lpgp/types.hpp"

namespace lpgp {

/// f(x) = sum_i a_i K(x, c_i) with RKHS norm exactly B.
struct SyntheticFunction {
    KernelSpec spec;
    std::vector<Point> centers;
    Eigen::VectorXd coefficients;
    double rkhs_norm = 0.0;
    double B = 0.0;
    Point x_star;
    double f_star = 0.0;

    double operator()(const Point& x) const;
};

/// Random centers and standard normal coefficients rescaled to norm B; x* by
/// grid search plus golden-section polish. Refuses D > 2.
SyntheticFunction make_synthetic(const KernelSpec& spec, int m, double B, std::mt19937_64& rng);

/// Regret bookkeeping for one run, indexed by evaluation.
struct RegretTrace {
    std::vector<double> instant;     ///< f(x*) - f(x_t)
    std::vector<double> simple;      ///< f(x*) - max_{s <= t} f(x_s)
    std::vector<double> cumulative;  ///< running sum of instant
    double final_simple = 0.0;       ///< f(x*) - f(z_n)

    double cumulative_total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

RegretTrace regret_trace(const RunResult& run, const SyntheticFunction& f);

/// 17 significant digits; NaN becomes an empty field.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const RunResult& run, int dim,
                     const RegretTrace* regret = nullptr, bool cells = false);
void write_trace_csv(const std::string& path, const RunResult& run, int dim,
                     const RegretTrace* regret = nullptr, bool cells = false);

/// Lengthscale maximizing the GP marginal likelihood over a log-spaced grid.
double select_lengthscale(const KernelSpec& spec, const Dataset& data, double lambda,
                          double lo = 0.02, double hi = 2.0, int grid = 25);

struct ExperimentSpec {
    Algorithm algo = Algorithm::LpGpUcb;
    KernelSpec objective_kernel;
    int centers = 5;
    OptimizerOptions options;
    BaselineOptions baseline;
    /// Pick the optimizer lengthscale from 5 uniform noisy samples taken before the run.
    bool ml_lengthscale = false;
    std::vector<std::uint64_t> seeds;
    unsigned threads = 0;  ///< 0 picks the hardware concurrency
};

struct SeedResult {
    std::uint64_t seed = 0;
    double lengthscale = 0.0;
    OptimizerConfig config;
    SyntheticFunction objective;
    RunResult run;
    RegretTrace regret;
};

/// Derives an independent stream seed from a run seed and a stream label.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// One full run for one seed. The objective depends on the seed only, so all
/// algorithms face the same function and noise stream for a given seed.
SeedResult run_seed(const ExperimentSpec& spec, std::uint64_t seed);

/// Runs every seed, in parallel when threads > 1; results are in seed order.
std::vector<SeedResult> run_experiment(const ExperimentSpec& spec);

struct AggregateRow {
    std::size_t checkpoint;
    Algorithm algo;
    double median_simple;
    double iqr_simple;
    double median_cum;
    double iqr_cum;
};

/// Median and interquartile range at checkpoints ceil(n j / 10), j = 1..10.
/// The last checkpoint reports the recommendation's simple regret.
std::vector<AggregateRow> aggregate(Algorithm algo, const std::vector<SeedResult>& results,
                                    int n);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows);

double median(std::vector<double> v);
/// Q3 - Q1 with linear interpolation between order statistics.
double iqr(std::vector<double> v);
double quantile(std::vector<double> v, double q);

/// Benchmark preset: Matern nu = 2.5, D = 1, B = 1, L = sqrt(2), sigma = 0.05,
/// delta = 0.1, ML lengthscale from 5 uniform samples.
ExperimentSpec matern25_d1_preset(Algorithm algo, int n, std::vector<std::uint64_t> seeds);

inline constexpr double kPresetObjectiveLengthscale = 0.2;

}  // namespace lpgp
