#include "lpgp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace lpgp {

namespace {

constexpr int kPolishIterations = 40;
constexpr int kPreSamples = 5;

enum Stream : std::uint64_t { kObjective = 1, kNoise = 2, kPreSample = 3, kPreNoise = 4, kRun = 5 };

template <class G>
double golden_argmax(G g, double a, double b) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < kPolishIterations; ++it) {
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
    return gc >= gd ? c : d;
}

void write_or_throw(const std::string& path, const auto& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

double SyntheticFunction::operator()(const Point& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i)
        v += coefficients(static_cast<Eigen::Index>(i)) * spec(x, centers[i]);
    return v;
}

SyntheticFunction make_synthetic(const KernelSpec& spec, int m, double B, std::mt19937_64& rng) {
    if (m < 1) throw std::invalid_argument("synthetic function needs at least one center");
    if (!(B > 0.0)) throw std::invalid_argument("synthetic function needs B > 0");
    const int dim = spec.dim();
    if (dim > 2) throw std::invalid_argument("optimum search is limited to D <= 2");

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    SyntheticFunction f{spec, {}, Eigen::VectorXd(m), 0.0, B, Point(), 0.0};
    for (int i = 0; i < m; ++i) {
        Point c(dim);
        for (int d = 0; d < dim; ++d) c(d) = unif(rng);
        f.centers.push_back(std::move(c));
    }
    for (int i = 0; i < m; ++i) f.coefficients(i) = normal(rng);

    Eigen::Index largest = 0;
    f.coefficients.cwiseAbs().maxCoeff(&largest);
    if (f.coefficients(largest) < 0.0) f.coefficients = -f.coefficients;
    const Eigen::MatrixXd g = gram(spec, f.centers);
    const double norm = std::sqrt(f.coefficients.dot(g * f.coefficients));
    f.coefficients *= B / norm;
    f.rkhs_norm = std::sqrt(f.coefficients.dot(g * f.coefficients));

    const int per_axis = dim == 1 ? 2001 : 201;
    const double step = 1.0 / (per_axis - 1);
    Point best(dim), x(dim);
    double best_v = -std::numeric_limits<double>::infinity();
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(per_axis);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (int d = dim - 1; d >= 0; --d) {
            x(d) = static_cast<double>(rest % static_cast<std::size_t>(per_axis)) * step;
            rest /= static_cast<std::size_t>(per_axis);
        }
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best = x;
        }
    }
    for (int d = 0; d < dim; ++d) {
        Point probe = best;
        const double s = golden_argmax(
            [&](double v) {
                probe(d) = v;
                return f(probe);
            },
            std::max(0.0, best(d) - step), std::min(1.0, best(d) + step));
        probe(d) = s;
        const double v = f(probe);
        if (v > best_v) {
            best_v = v;
            best = probe;
        }
    }
    f.x_star = best;
    f.f_star = best_v;
    return f;
}

RegretTrace regret_trace(const RunResult& run, const SyntheticFunction& f) {
    RegretTrace r;
    double best = -std::numeric_limits<double>::infinity();
    double cum = 0.0;
    for (const RoundRecord& rec : run.trace) {
        if (rec.action != Action::Evaluate) continue;
        const double v = f(rec.x);
        best = std::max(best, v);
        cum += f.f_star - v;
        r.instant.push_back(f.f_star - v);
        r.simple.push_back(f.f_star - best);
        r.cumulative.push_back(cum);
    }
    r.final_simple = run.recommendation.size() > 0 ? f.f_star - f(run.recommendation)
                                                   : std::numeric_limits<double>::quiet_NaN();
    return r;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(std::ostream& out, const RunResult& run, int dim, const RegretTrace* regret,
                     bool cells) {
    out << "t,n_e,action";
    for (int d = 0; d < dim; ++d) out << ",x" << d;
    out << ",y,ucb,beta_sigma,b_t,simple_regret,cum_regret";
    if (cells) {
        for (int d = 0; d < dim; ++d) out << ",cell_lower" << d;
        for (int d = 0; d < dim; ++d) out << ",cell_side" << d;
    }
    out << '\n';

    std::size_t evals = 0;
    for (const RoundRecord& rec : run.trace) {
        out << rec.t << ',' << rec.evaluations << ',' << to_string(rec.action);
        for (int d = 0; d < dim; ++d)
            out << ',' << (d < rec.x.size() ? format_double(rec.x(d)) : std::string());
        out << ',' << (rec.y ? format_double(*rec.y) : std::string());
        out << ',' << format_double(rec.ucb) << ',' << format_double(rec.beta_sigma) << ','
            << format_double(rec.b_t);
        if (rec.action == Action::Evaluate && regret && evals < regret->simple.size()) {
            out << ',' << format_double(regret->simple[evals]) << ','
                << format_double(regret->cumulative[evals]);
        } else {
            out << ",,";
        }
        if (rec.action == Action::Evaluate) ++evals;
        if (cells) {
            const bool has = rec.cell_lower.size() == dim && rec.cell_upper.size() == dim;
            for (int d = 0; d < dim; ++d)
                out << ',' << (has ? format_double(rec.cell_lower(d)) : std::string());
            for (int d = 0; d < dim; ++d)
                out << ','
                    << (has ? format_double(rec.cell_upper(d) - rec.cell_lower(d)) : std::string());
        }
        out << '\n';
    }
}

void write_trace_csv(const std::string& path, const RunResult& run, int dim,
                     const RegretTrace* regret, bool cells) {
    write_or_throw(path, [&](std::ostream& out) { write_trace_csv(out, run, dim, regret, cells); });
}

double select_lengthscale(const KernelSpec& spec, const Dataset& data, double lambda, double lo,
                          double hi, int grid) {
    if (grid < 2 || !(lo > 0.0) || !(hi > lo))
        throw std::invalid_argument("lengthscale grid needs 0 < lo < hi and at least 2 points");
    double best = lo;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        const double theta = lo * std::pow(hi / lo, static_cast<double>(i) / (grid - 1));
        const double ll =
            GpPosterior::fit(spec.with_lengthscale(theta), data, lambda).log_marginal_likelihood();
        if (ll > best_ll) {
            best_ll = ll;
            best = theta;
        }
    }
    return best;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t out[2];
    seq.generate(std::begin(out), std::end(out));
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

SeedResult run_seed(const ExperimentSpec& spec, std::uint64_t seed) {
    std::mt19937_64 objective_rng(stream_seed(seed, kObjective));
    SyntheticFunction f =
        make_synthetic(spec.objective_kernel, spec.centers, spec.options.B, objective_rng);
    const double sigma = spec.options.sigma;

    KernelSpec model = spec.objective_kernel;
    if (spec.ml_lengthscale) {
        std::mt19937_64 sample_rng(stream_seed(seed, kPreSample));
        const Oracle pre = noisy_oracle(std::cref(f), sigma, stream_seed(seed, kPreNoise));
        const int dim = model.dim();
        Dataset first;
        for (int i = 0; i < kPreSamples; ++i) {
            Point x = random_step(dim, sample_rng);
            const double y = pre(x);
            first.push_back({std::move(x), y});
        }
        const double lambda = spec.options.lambda.value_or(std::max(sigma * sigma, 1e-6));
        model = model.with_lengthscale(select_lengthscale(model, first, lambda));
    }

    OptimizerOptions options = spec.options;
    options.seed = stream_seed(seed, kRun);
    OptimizerConfig config = build_config(model, options);
    const Oracle oracle = noisy_oracle(std::cref(f), sigma, stream_seed(seed, kNoise));
    RunResult run = run_algorithm(spec.algo, oracle, config, spec.baseline);
    RegretTrace regret = regret_trace(run, f);
    return {seed, model.lengthscale(), std::move(config), std::move(f), std::move(run),
            std::move(regret)};
}

std::vector<SeedResult> run_experiment(const ExperimentSpec& spec) {
    const std::size_t count = spec.seeds.size();
    std::vector<std::optional<SeedResult>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i] = run_seed(spec, spec.seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    unsigned threads = spec.threads > 0 ? spec.threads : std::thread::hardware_concurrency();
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<SeedResult> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (errors[i]) {
            const std::string where = "seed " + std::to_string(spec.seeds[i]) + ": ";
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(where + e.what());
            } catch (const std::exception& e) {
                throw std::runtime_error(where + e.what());
            }
        }
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double iqr(std::vector<double> v) { return quantile(v, 0.75) - quantile(v, 0.25); }

std::vector<AggregateRow> aggregate(Algorithm algo, const std::vector<SeedResult>& results,
                                    int n) {
    if (results.empty()) throw std::invalid_argument("nothing to aggregate");
    std::vector<std::size_t> checkpoints;
    for (int j = 1; j <= 10; ++j) {
        const auto c = static_cast<std::size_t>((static_cast<long>(n) * j + 9) / 10);
        if (checkpoints.empty() || checkpoints.back() != c) checkpoints.push_back(c);
    }
    std::vector<AggregateRow> rows;
    for (std::size_t c : checkpoints) {
        const bool last = c == static_cast<std::size_t>(n);
        std::vector<double> simple, cum;
        for (const SeedResult& r : results) {
            if (r.regret.simple.size() < c)
                throw std::runtime_error("seed " + std::to_string(r.seed) +
                                         ": fewer evaluations than the checkpoint");
            simple.push_back(last ? r.regret.final_simple : r.regret.simple[c - 1]);
            cum.push_back(r.regret.cumulative[c - 1]);
        }
        rows.push_back({c, algo, median(simple), iqr(simple), median(cum), iqr(cum)});
    }
    return rows;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "checkpoint,algo,median_simple,iqr_simple,median_cum,iqr_cum\n";
    for (const AggregateRow& r : rows)
        out << r.checkpoint << ',' << to_string(r.algo) << ',' << format_double(r.median_simple)
            << ',' << format_double(r.iqr_simple) << ',' << format_double(r.median_cum) << ','
            << format_double(r.iqr_cum) << '\n';
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
    write_or_throw(path, [&](std::ostream& out) { write_aggregate_csv(out, rows); });
}

ExperimentSpec matern25_d1_preset(Algorithm algo, int n, std::vector<std::uint64_t> seeds) {
    ExperimentSpec spec{
        .algo = algo,
        .objective_kernel = KernelSpec::matern(2.5, kPresetObjectiveLengthscale, 1),
        .centers = 5,
        .options = {},
        .baseline = {},
        .ml_lengthscale = true,
        .seeds = std::move(seeds),
        .threads = 0,
    };
    spec.options.n = n;
    spec.options.B = 1.0;
    spec.options.sigma = 0.05;
    spec.options.delta = 0.1;
    spec.options.L = std::sqrt(2.0);
    return spec;
}

}  // namespace lpgp
