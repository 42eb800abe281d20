#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "lpgp/baselines.hpp"
#include "lpgp/bench.hpp"
#include "lpgp/kernels.hpp"
#include "lpgp/optimizer.hpp"

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

struct KernelArgs {
    std::string family = "matern";
    double nu = 2.5;
    double lengthscale = 0.2;
    double a = 1.0;
    int q = 0;
    int dim = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kernel", family, "kernel family")
            ->check(CLI::IsMember({"se", "matern", "rq", "ge", "pp"}));
        cmd->add_option("--nu", nu, "Matern smoothness");
        cmd->add_option("--lengthscale", lengthscale, "kernel lengthscale");
        cmd->add_option("--a", a, "RQ / GE shape parameter");
        cmd->add_option("--q", q, "PP order")->check(CLI::IsMember({0, 1}));
        cmd->add_option("--dim", dim, "input dimension");
    }

    lpgp::KernelSpec build() const {
        return lpgp::KernelSpec::make(lpgp::parse_kernel_family(family), lengthscale, dim, nu, a, q);
    }
};

struct RunArgs {
    std::string algo = "lpgpucb";
    KernelArgs kernel;
    int budget = 50;
    double sigma = 0.05;
    double delta = 0.1;
    double B = 1.0;
    std::optional<double> L;
    std::optional<int> k;
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    int centers = 5;
    std::string out;
    bool trace_cells = false;
};

int do_run(const RunArgs& args) {
    lpgp::ExperimentSpec spec{
        .algo = lpgp::parse_algorithm(args.algo),
        .objective_kernel = args.kernel.build(),
        .centers = args.centers,
        .options = {},
        .baseline = {},
        .ml_lengthscale = false,
        .seeds = {args.seed},
        .threads = 1,
    };
    spec.options.n = args.budget;
    spec.options.B = args.B;
    spec.options.sigma = args.sigma;
    spec.options.delta = args.delta;
    spec.options.L = args.L;
    spec.options.k = args.k;
    spec.options.alpha = args.alpha;
    if (spec.algo == lpgp::Algorithm::Heuristic && args.alpha)
        spec.baseline.heuristic_alpha = *args.alpha;

    const lpgp::SeedResult r = lpgp::run_seed(spec, args.seed);
    const int dim = args.kernel.dim;
    if (args.out.empty() || args.out == "-")
        lpgp::write_trace_csv(std::cout, r.run, dim, &r.regret, args.trace_cells);
    else
        lpgp::write_trace_csv(args.out, r.run, dim, &r.regret, args.trace_cells);

    std::fprintf(stderr, "rounds %zu, evaluations %zu, final simple regret %s, cumulative %s\n",
                 r.run.trace.size(), r.regret.instant.size(),
                 lpgp::format_double(r.regret.final_simple).c_str(),
                 lpgp::format_double(r.regret.cumulative_total()).c_str());
    return 0;
}

int do_bench(const std::string& preset, int seeds, int budget, unsigned threads,
             const std::string& out) {
    if (preset != "matern25-d1") throw std::invalid_argument("unknown preset: " + preset);
    if (seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
    std::vector<std::uint64_t> seed_list(static_cast<std::size_t>(seeds));
    std::iota(seed_list.begin(), seed_list.end(), std::uint64_t{0});

    std::vector<lpgp::AggregateRow> rows;
    for (lpgp::Algorithm algo :
         {lpgp::Algorithm::LpGpUcb, lpgp::Algorithm::Heuristic, lpgp::Algorithm::IgpUcb,
          lpgp::Algorithm::Ei, lpgp::Algorithm::Pi, lpgp::Algorithm::Random}) {
        lpgp::ExperimentSpec spec = lpgp::matern25_d1_preset(algo, budget, seed_list);
        spec.threads = threads;
        const auto results = lpgp::run_experiment(spec);
        const auto agg = lpgp::aggregate(algo, results, budget);
        rows.insert(rows.end(), agg.begin(), agg.end());
        std::fprintf(stderr, "%s done\n", std::string(lpgp::to_string(algo)).c_str());
    }
    if (out.empty() || out == "-")
        lpgp::write_aggregate_csv(std::cout, rows);
    else
        lpgp::write_aggregate_csv(out, rows);
    return 0;
}

int do_gamma(const KernelArgs& kernel, int budget, int grid_size, double sigma) {
    const lpgp::KernelSpec spec = kernel.build();
    try {
        std::printf("analytic %s\n",
                    lpgp::format_double(lpgp::info_gain_bound(spec, budget, sigma)).c_str());
    } catch (const lpgp::NoAnalyticBound&) {
        std::printf("analytic unavailable\n");
    }
    if (grid_size < budget) throw std::invalid_argument("--grid-size must be at least --budget");
    const auto grid = lpgp::halton(static_cast<std::size_t>(grid_size), spec.dim());
    std::printf("greedy %s\n",
                lpgp::format_double(lpgp::greedy_info_gain(spec, grid, budget, sigma)).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LP-GP-UCB optimizer and regret benchmarks"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "run one optimizer on a synthetic objective");
    run_cmd->add_option("--algo", run.algo)
        ->check(CLI::IsMember({"lpgpucb", "heuristic", "igpucb", "ei", "pi", "random"}));
    run.kernel.add_to(run_cmd);
    run_cmd->add_option("--budget", run.budget, "evaluation budget n");
    run_cmd->add_option("--sigma", run.sigma, "noise scale");
    run_cmd->add_option("--delta", run.delta, "confidence level");
    run_cmd->add_option("--B", run.B, "RKHS norm bound");
    run_cmd->add_option("--L", run.L, "Hoelder constant (default B log n or the kernel constant)");
    run_cmd->add_option("--k", run.k, "local polynomial degree");
    run_cmd->add_option("--alpha", run.alpha, "Hoelder exponent");
    run_cmd->add_option("--seed", run.seed);
    run_cmd->add_option("--centers", run.centers, "number of bumps in the synthetic objective");
    run_cmd->add_option("--out", run.out, "trace CSV path (stdout if omitted)");
    run_cmd->add_flag("--trace-cells", run.trace_cells, "append the selected cell to each row");

    std::string preset = "matern25-d1";
    int seeds = 20;
    int bench_budget = 200;
    unsigned threads = 0;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "run all algorithms on a preset");
    bench_cmd->add_option("--preset", preset)->check(CLI::IsMember({"matern25-d1"}));
    bench_cmd->add_option("--seeds", seeds, "number of seeds");
    bench_cmd->add_option("--budget", bench_budget, "evaluation budget n");
    bench_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    bench_cmd->add_option("--out", bench_out, "aggregate CSV path (stdout if omitted)");

    KernelArgs gamma_kernel;
    int gamma_budget = 10;
    int grid_size = 100;
    double gamma_sigma = 0.05;
    auto* gamma_cmd = app.add_subcommand("gamma", "information-gain bounds");
    gamma_kernel.add_to(gamma_cmd);
    gamma_cmd->add_option("--budget", gamma_budget);
    gamma_cmd->add_option("--grid-size", grid_size);
    gamma_cmd->add_option("--sigma", gamma_sigma);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (*run_cmd) return do_run(run);
        if (*bench_cmd) return do_bench(preset, seeds, bench_budget, threads, bench_out);
        return do_gamma(gamma_kernel, gamma_budget, grid_size, gamma_sigma);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
