// Command-line frontend for the block-greedy coordinate descent library.
//
//   blockcd solve    --data train.svm --loss squared --lambda 1e-4,1e-5 ...
//   blockcd cluster  --data train.svm --blocks 32 --out-partition part.txt
//   blockcd spectral --data train.svm --partition-file part.txt --parallel 8,32

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blockcd/io.hpp"
#include "blockcd/losses.hpp"
#include "blockcd/partition.hpp"
#include "blockcd/problem.hpp"
#include "blockcd/solver.hpp"
#include "blockcd/spectral.hpp"

namespace fs = std::filesystem;
using namespace blockcd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

unsigned default_threads() {
    if (const char* env = std::getenv("BLOCKCD_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

struct CommonOpts {
    std::string data_path;
    std::string loss_name = "squared";
    bool normalize = false;
    std::uint64_t seed = 1;
};

Loss parse_loss(const std::string& name) {
    if (name == "squared") return Loss::squared;
    if (name == "logistic") return Loss::logistic;
    throw CLI::ValidationError("--loss", "expected 'squared' or 'logistic'");
}

Dataset load_dataset(const CommonOpts& opts, Loss loss) {
    Dataset ds = read_libsvm(opts.data_path);
    if (loss == Loss::logistic) map_labels_for_logistic(ds.labels);
    if (opts.normalize) {
        auto norm = ds.design.normalize_columns();
        ds.design = std::move(norm.matrix);
    }
    return ds;
}

std::vector<double> parse_lambda_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
        if (out.back() < 0.0) throw CLI::ValidationError("--lambda", "lambda must be >= 0");
    }
    if (out.empty()) throw CLI::ValidationError("--lambda", "empty lambda list");
    return out;
}

struct AlgorithmChoice {
    std::size_t num_blocks;
    std::size_t parallelism;
};

AlgorithmChoice resolve_algorithm(const std::string& algorithm, std::size_t p,
                                  std::optional<std::size_t> blocks,
                                  std::optional<std::size_t> parallel) {
    if (algorithm == "scd") return {p, 1};
    if (algorithm == "shotgun") return {p, parallel.value_or(1)};
    if (algorithm == "greedy") return {1, 1};
    if (algorithm == "thread-greedy") {
        std::size_t B = blocks.value_or(32);
        return {B, B};
    }
    if (algorithm == "block-greedy") {
        std::size_t B = blocks.value_or(32);
        return {B, parallel.value_or(B)};
    }
    throw CLI::ValidationError("--algorithm", "unknown algorithm '" + algorithm + "'");
}

Partition make_partition(const std::string& source, const SparseColMatrix& m,
                         std::size_t B, std::uint64_t seed) {
    if (source == "cluster") {
        if (B == m.cols()) return Partition::singleton_blocks(m.cols());
        if (B == 1) return Partition::single_block(m.cols());
        return cluster_features(m, B);
    }
    if (source == "random") {
        std::mt19937_64 rng(seed);
        return random_partition(rng, m.cols(), B);
    }
    if (source.rfind("file:", 0) == 0) {
        Partition part = read_partition_file(source.substr(5));
        if (part.num_blocks() != B || part.num_features() != m.cols()) {
            throw std::runtime_error("partition file does not match (B=" +
                                     std::to_string(B) + ", p=" +
                                     std::to_string(m.cols()) + ")");
        }
        return part;
    }
    throw CLI::ValidationError("--partition", "expected cluster, random, or file:<path>");
}

std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    return buf;
}

void write_weights(const WeightVector& w, double lambda, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    char buf[64];
    out << "# features=" << w.size() << " lambda=" << lambda_tag(lambda)
        << " nnz=" << w.nnz() << "\n";
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] == 0.0) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", w[j]);
        out << j << " " << buf << "\n";
    }
}

// Largest power of ten whose probe run keeps any weight active, found by a
// downward search from just above the zero-solution threshold.
double find_lambda0(const Problem& base, const Partition& part, SolverConfig cfg) {
    Problem probe = base;
    cfg.max_iterations = std::min<std::size_t>(cfg.max_iterations, 200);
    cfg.max_seconds = 0.0;
    cfg.trace_every_iters = 0;
    cfg.trace_every_seconds = 0.0;

    // Above max_j |g_j(0)| the zero vector is optimal, so start there.
    std::vector<double> zero_preds(base.num_samples(), 0.0);
    WeightVector zero(base.num_features());
    double gmax = 0.0;
    for (std::size_t j = 0; j < base.num_features(); ++j) {
        if (base.design.column_empty(j)) continue;
        gmax = std::max(gmax, std::abs(coordinate_gradient(base, j, zero_preds)));
    }
    if (gmax == 0.0) throw std::runtime_error("auto-lambda0: gradient at zero is zero");

    int k = static_cast<int>(std::ceil(std::log10(gmax)));
    for (; k > -300; --k) {
        probe.lambda = std::pow(10.0, k);
        SolveResult r = run(probe, part, cfg);
        if (r.weights.nnz() > 0) return probe.lambda;
    }
    throw std::runtime_error("auto-lambda0: no lambda produced nonzero weights");
}

int cmd_solve(const CommonOpts& common, const std::string& algorithm,
              std::optional<std::size_t> blocks, std::optional<std::size_t> parallel,
              const std::string& partition_source, const std::string& lambda_text,
              bool auto_lambda0, double tol, std::size_t max_iters, double max_seconds,
              unsigned threads, std::size_t trace_iters, double trace_seconds,
              bool deterministic_trace, const std::string& out_dir) {
    Loss loss = parse_loss(common.loss_name);
    Dataset ds = load_dataset(common, loss);
    const std::size_t p = ds.design.cols();

    AlgorithmChoice alg = resolve_algorithm(algorithm, p, blocks, parallel);
    Partition part = make_partition(partition_source, ds.design, alg.num_blocks,
                                    common.seed);

    SolverConfig cfg;
    cfg.num_blocks = alg.num_blocks;
    cfg.parallelism = alg.parallelism;
    cfg.tolerance = tol;
    cfg.max_iterations = max_iters;
    cfg.max_seconds = max_seconds;
    cfg.rng_seed = common.seed;
    cfg.trace_every_iters = trace_iters;
    cfg.trace_every_seconds = trace_seconds;
    cfg.threads = threads;
    cfg.zero_elapsed_in_trace = deterministic_trace;

    std::vector<double> lambdas;
    if (auto_lambda0) {
        Problem probe_problem(ds.design, ds.labels, loss, 0.0);
        double lambda0 = find_lambda0(probe_problem, part, cfg);
        for (int i = 0; i < 4; ++i) lambdas.push_back(lambda0 * std::pow(10.0, -i));
    } else {
        lambdas = parse_lambda_list(lambda_text);
    }

    fs::create_directories(out_dir);

    std::cout << "lambda,active_blocks,iterations,termination,nnz,objective\n";
    for (double lambda : lambdas) {
        Problem problem(ds.design, ds.labels, loss, lambda);
        SolveResult result = run(problem, part, cfg);

        std::string tag = lambda_tag(lambda);
        write_trace(result.trace, out_dir + "/trace_lambda" + tag + ".csv");
        write_weights(result.weights, lambda, out_dir + "/weights_lambda" + tag + ".txt");

        // Cross-check the reported objective against a fresh recomputation
        // from the final weights.
        auto preds = problem.design.predictions(result.weights.values());
        double obj = objective(problem, result.weights, preds);
        if (std::isfinite(obj) && std::isfinite(result.final_objective) &&
            std::abs(obj - result.final_objective) > 1e-10 * std::max(1.0, std::abs(obj))) {
            std::cerr << "warning: traced objective " << result.final_objective
                      << " differs from recomputed " << obj << "\n";
        }

        PartitionStats stats = partition_stats(ds.design, part, &result.weights);
        const char* reason = result.reason == Termination::converged    ? "converged"
                             : result.reason == Termination::max_seconds ? "max_seconds"
                             : result.reason == Termination::diverged    ? "diverged"
                                                                         : "max_iterations";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.12g", obj);
        std::cout << tag << "," << stats.active_blocks.value_or(0) << ","
                  << result.iterations << "," << reason << "," << result.weights.nnz()
                  << "," << buf << "\n";
    }
    return kExitOk;
}

int cmd_cluster(const CommonOpts& common, std::size_t blocks,
                const std::string& out_partition) {
    Dataset ds = load_dataset(common, Loss::squared);
    auto start = std::chrono::steady_clock::now();
    Partition part = cluster_features(ds.design, blocks);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                      .count();
    write_partition_file(part, out_partition);

    PartitionStats stats = partition_stats(ds.design, part);
    std::cout << "blocks = " << part.num_blocks() << "\n";
    std::cout << "features = " << part.num_features() << "\n";
    std::cout << "clustering_seconds = " << secs << "\n";
    std::cout << "max_block_nnz = " << stats.max_block_nnz << "\n";
    std::cout << "min_block_nnz = " << stats.min_block_nnz << "\n";
    std::cout << "mean_block_nnz = " << stats.mean_block_nnz << "\n";
    if (stats.min_block_nnz > 0) {
        std::cout << "load_balance_ratio = "
                  << static_cast<double>(stats.max_block_nnz) /
                         static_cast<double>(stats.min_block_nnz)
                  << "\n";
    }
    return kExitOk;
}

int cmd_spectral(const CommonOpts& common, const std::string& partition_file,
                 std::optional<std::size_t> blocks, const std::string& parallel_text,
                 std::size_t samples) {
    Dataset ds = load_dataset(common, Loss::squared);

    Partition part;
    if (!partition_file.empty()) {
        part = read_partition_file(partition_file);
        if (part.num_features() != ds.design.cols()) {
            throw std::runtime_error("partition file feature count mismatch");
        }
    } else if (blocks) {
        part = cluster_features(ds.design, *blocks);
    } else {
        throw CLI::ValidationError("spectral", "need --partition-file or --blocks");
    }

    for (std::size_t j = 0; j < ds.design.cols(); ++j) {
        if (!ds.design.column_empty(j) &&
            std::abs(ds.design.column_sq_norm(j) - 1.0) > 1e-6) {
            std::cerr << "warning: columns are not unit-normalized; "
                         "rho/epsilon assume unit norms (use --normalize)\n";
            break;
        }
    }

    std::vector<std::size_t> parallel_values;
    std::stringstream ss(parallel_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) parallel_values.push_back(std::stoul(tok));
    }
    if (parallel_values.empty()) parallel_values.push_back(part.num_blocks());

    SpectralReport report =
        spectral_report(ds.design, part, parallel_values, samples, common.seed);
    write_spectral_report(report, std::cout);
    if (report.epsilon_hat_exact && report.exact &&
        report.rho_estimate > report.prop1 + 1e-9) {
        std::cout << "prop1_check = FAILED\n";
        return kExitRuntime;
    }
    std::cout << "prop1_check = ok\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-greedy coordinate descent for l1-regularized loss minimization"};
    app.require_subcommand(1);

    CommonOpts common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--data", common.data_path, "LIBSVM-format dataset")->required();
        sub->add_option("--seed", common.seed, "RNG seed");
        sub->add_flag("--normalize", common.normalize, "unit-l2-normalize feature columns");
    };

    // solve
    auto* solve = app.add_subcommand("solve", "run the solver over a lambda grid");
    add_common(solve);
    std::string algorithm = "block-greedy";
    std::optional<std::size_t> blocks_opt, parallel_opt;
    std::string partition_source = "cluster";
    std::string lambda_text;
    bool auto_lambda0 = false;
    double tol = 1e-6;
    std::size_t max_iters = 100000;
    double max_seconds = 0.0;
    unsigned threads = default_threads();
    std::size_t trace_iters = 1000;
    double trace_seconds = 1.0;
    bool deterministic_trace = false;
    std::string out_dir = "blockcd_out";
    solve->add_option("--loss", common.loss_name, "squared | logistic");
    solve->add_option("--algorithm", algorithm,
                      "scd | shotgun | greedy | thread-greedy | block-greedy");
    solve->add_option("--blocks", blocks_opt, "number of blocks B");
    solve->add_option("--parallel", parallel_opt, "degree of parallelism P");
    solve->add_option("--partition", partition_source, "cluster | random | file:<path>");
    solve->add_option("--lambda", lambda_text, "comma-separated lambda list");
    solve->add_flag("--auto-lambda0", auto_lambda0,
                    "largest power of ten with nonzero weights, then 3 more decades");
    solve->add_option("--tol", tol, "convergence tolerance on max |eta|");
    solve->add_option("--max-iters", max_iters, "iteration budget");
    solve->add_option("--max-seconds", max_seconds, "wall-clock budget (0 = unlimited)");
    solve->add_option("--threads", threads, "worker threads (default $BLOCKCD_THREADS or 1)");
    solve->add_option("--trace-iters", trace_iters, "trace every k iterations (0 = off)");
    solve->add_option("--trace-seconds", trace_seconds, "trace every s seconds (0 = off)");
    solve->add_flag("--deterministic-trace", deterministic_trace,
                    "write 0 for elapsed time so trace files are byte-reproducible");
    solve->add_option("--out", out_dir, "output directory");

    // cluster
    auto* cluster = app.add_subcommand("cluster", "correlation-based feature clustering");
    add_common(cluster);
    std::size_t cluster_blocks = 32;
    std::string out_partition = "partition.txt";
    cluster->add_option("--blocks", cluster_blocks, "number of blocks B")->required();
    cluster->add_option("--out-partition", out_partition, "partition file to write");

    // spectral
    auto* spectral = app.add_subcommand("spectral", "block spectral radius diagnostics");
    add_common(spectral);
    std::string partition_file;
    std::optional<std::size_t> spectral_blocks;
    std::string parallel_text;
    std::size_t samples = 10000;
    spectral->add_option("--partition-file", partition_file, "partition file to analyze");
    spectral->add_option("--blocks", spectral_blocks, "cluster into B blocks instead");
    spectral->add_option("--parallel", parallel_text, "comma-separated P values to report");
    spectral->add_option("--samples", samples, "Monte Carlo samples when enumeration is infeasible");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (solve->parsed()) {
            if (!auto_lambda0 && lambda_text.empty()) {
                std::cerr << "solve: need --lambda or --auto-lambda0\n";
                return kExitUsage;
            }
            return cmd_solve(common, algorithm, blocks_opt, parallel_opt, partition_source,
                             lambda_text, auto_lambda0, tol, max_iters, max_seconds,
                             threads, trace_iters, trace_seconds, deterministic_trace,
                             out_dir);
        }
        if (cluster->parsed()) {
            return cmd_cluster(common, cluster_blocks, out_partition);
        }
        if (spectral->parsed()) {
            return cmd_spectral(common, partition_file, spectral_blocks, parallel_text,
                                samples);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
