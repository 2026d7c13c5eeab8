#include "blockcd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>
#include <unordered_set>

namespace blockcd {

namespace {

double soft_threshold(double z, double tau) {
    if (z > tau) return z - tau;
    if (z < -tau) return z + tau;
    return 0.0;
}

using Clock = std::chrono::steady_clock;

double elapsed_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Proposal propose_increment(double g, double beta_j, double w_j, double lambda) {
    if (!(beta_j > 0.0)) {
        throw std::invalid_argument("propose_increment: beta_j must be > 0");
    }
    double eta = soft_threshold(w_j - g / beta_j, lambda / beta_j) - w_j;
    double descent = g * eta + 0.5 * beta_j * eta * eta +
                     lambda * (std::abs(w_j + eta) - std::abs(w_j));
    return Proposal{0, eta, descent};
}

std::vector<std::size_t> select_blocks(std::mt19937_64& rng, std::size_t num_blocks,
                                       std::size_t parallelism) {
    if (parallelism > num_blocks || parallelism == 0) {
        throw std::invalid_argument("select_blocks: require 1 <= P <= B");
    }
    std::vector<std::size_t> picked;
    picked.reserve(parallelism);
    if (parallelism == num_blocks) {
        // Thread-greedy case: no randomness, generator untouched.
        for (std::size_t b = 0; b < num_blocks; ++b) picked.push_back(b);
        return picked;
    }
    if (parallelism == 1) {
        std::uniform_int_distribution<std::size_t> dist(0, num_blocks - 1);
        picked.push_back(dist(rng));
        return picked;
    }
    if (parallelism * 2 <= num_blocks) {
        // Rejection sampling; cheap while P is small relative to B.
        std::uniform_int_distribution<std::size_t> dist(0, num_blocks - 1);
        std::unordered_set<std::size_t> seen;
        while (seen.size() < parallelism) seen.insert(dist(rng));
        picked.assign(seen.begin(), seen.end());
    } else {
        // Partial Fisher-Yates over a scratch pool.
        std::vector<std::size_t> pool(num_blocks);
        for (std::size_t b = 0; b < num_blocks; ++b) pool[b] = b;
        for (std::size_t k = 0; k < parallelism; ++k) {
            std::uniform_int_distribution<std::size_t> dist(k, num_blocks - 1);
            std::swap(pool[k], pool[dist(rng)]);
            picked.push_back(pool[k]);
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::optional<Proposal> greedy_accept(std::span<const Proposal> proposals) {
    const Proposal* best = nullptr;
    for (const Proposal& prop : proposals) {
        if (std::abs(prop.eta) == 0.0) continue;
        if (best == nullptr || std::abs(prop.eta) > std::abs(best->eta) ||
            (std::abs(prop.eta) == std::abs(best->eta) && prop.feature < best->feature)) {
            best = &prop;
        }
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

void apply_updates(IterateState& state, const SparseColMatrix& design,
                   std::span<const Proposal> accepted, unsigned threads) {
    for (std::size_t a = 0; a < accepted.size(); ++a) {
        for (std::size_t b = a + 1; b < accepted.size(); ++b) {
            if (accepted[a].feature == accepted[b].feature) {
                throw std::logic_error("apply_updates: duplicate feature in accepted set");
            }
        }
    }
    std::span<double> preds(state.cached_predictions);
    if (threads > 1 && accepted.size() > 1) {
        unsigned nt = std::min<unsigned>(threads, accepted.size());
        std::vector<std::thread> pool;
        pool.reserve(nt);
        std::atomic<std::size_t> next{0};
        for (unsigned t = 0; t < nt; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t a = next.fetch_add(1);
                    if (a >= accepted.size()) break;
                    design.add_scaled_column_atomic(accepted[a].feature, accepted[a].eta,
                                                    preds);
                }
            });
        }
        for (auto& th : pool) th.join();
    } else {
        for (const Proposal& prop : accepted) {
            design.add_scaled_column(prop.feature, prop.eta, preds);
        }
    }
    for (const Proposal& prop : accepted) {
        state.weights.add(prop.feature, prop.eta);
    }
}

namespace {

// Propose over every feature of one block and keep the per-block best,
// tracking the max |eta| among all proposals of the block.
struct BlockScan {
    std::optional<Proposal> best;
    double max_abs_eta = 0.0;
};

BlockScan scan_block(const Problem& problem, const Partition& partition,
                     std::size_t block, const IterateState& state,
                     std::span<const double> betas) {
    std::vector<Proposal> proposals;
    auto features = partition.block(block);
    proposals.reserve(features.size());
    for (std::size_t j : features) {
        if (problem.design.column_empty(j)) continue;
        double g = coordinate_gradient(problem, j, state.cached_predictions);
        Proposal prop = propose_increment(g, betas[j], state.weights[j], problem.lambda);
        prop.feature = j;
        proposals.push_back(prop);
    }
    BlockScan out;
    out.best = greedy_accept(proposals);
    for (const Proposal& prop : proposals) {
        out.max_abs_eta = std::max(out.max_abs_eta, std::abs(prop.eta));
    }
    return out;
}

}  // namespace

SolveResult run(const Problem& problem, const Partition& partition,
                const SolverConfig& config) {
    const std::size_t p = problem.num_features();
    if (partition.num_features() != p) {
        throw std::invalid_argument("run: partition does not cover the feature set");
    }
    if (partition.num_blocks() != config.num_blocks) {
        throw std::invalid_argument("run: config.num_blocks != partition blocks");
    }
    const std::size_t B = config.num_blocks;
    const std::size_t P = config.parallelism;
    if (B < 1 || B > p || P < 1 || P > B) {
        throw std::invalid_argument("run: require 1 <= P <= B <= p");
    }
    if (!(config.tolerance > 0.0)) {
        throw std::invalid_argument("run: tolerance must be > 0");
    }

    std::vector<double> betas = curvature_constants(problem, config.beta_policy);

    IterateState state;
    state.weights = WeightVector(p);
    state.cached_predictions.assign(problem.num_samples(), 0.0);
    state.iteration = 0;

    SolveResult result;
    std::mt19937_64 rng(config.rng_seed);
    const auto start = Clock::now();

    const std::size_t quiet_rounds_needed = (B + P - 1) / P;
    std::size_t quiet_rounds = 0;
    double last_trace_time = 0.0;
    double round_max_eta = 0.0;

    auto emit_trace = [&](double max_eta) {
        // Recompute the prediction cache at every trace point to bound drift.
        state.cached_predictions = problem.design.predictions(state.weights.values());
        state.objective = objective(problem, state.weights, state.cached_predictions);
        double now = config.zero_elapsed_in_trace ? 0.0 : elapsed_since(start);
        result.trace.push_back(TraceRecord{state.iteration, now, state.objective,
                                           state.weights.nnz(), max_eta});
        last_trace_time = elapsed_since(start);
    };

    emit_trace(0.0);

    Termination reason = Termination::max_iterations;
    std::vector<std::size_t> selected;
    std::vector<BlockScan> scans;
    std::vector<Proposal> accepted;

    while (state.iteration < config.max_iterations) {
        if (config.max_seconds > 0.0 && elapsed_since(start) >= config.max_seconds) {
            reason = Termination::max_seconds;
            break;
        }

        selected = select_blocks(rng, B, P);
        scans.assign(selected.size(), BlockScan{});

        if (config.threads > 1 && selected.size() > 1) {
            unsigned nt = std::min<unsigned>(config.threads, selected.size());
            std::vector<std::thread> pool;
            pool.reserve(nt);
            std::atomic<std::size_t> next{0};
            for (unsigned t = 0; t < nt; ++t) {
                pool.emplace_back([&] {
                    for (;;) {
                        std::size_t k = next.fetch_add(1);
                        if (k >= selected.size()) break;
                        scans[k] = scan_block(problem, partition, selected[k], state, betas);
                    }
                });
            }
            for (auto& th : pool) th.join();
        } else {
            for (std::size_t k = 0; k < selected.size(); ++k) {
                scans[k] = scan_block(problem, partition, selected[k], state, betas);
            }
        }

        round_max_eta = 0.0;
        accepted.clear();
        for (const BlockScan& scan : scans) {
            round_max_eta = std::max(round_max_eta, scan.max_abs_eta);
            if (scan.best) accepted.push_back(*scan.best);
        }

        // Updates are applied in block order even when proposing ran on
        // several threads, so the run is reproducible across thread counts.
        apply_updates(state, problem.design, accepted, 1);
        ++state.iteration;

        if (config.record_accepted) {
            for (const Proposal& prop : accepted) {
                result.accepted.push_back(AcceptedUpdate{state.iteration, prop.feature,
                                                         prop.eta, prop.guaranteed_descent});
            }
        }

        bool trace_due = false;
        if (config.trace_every_iters > 0 &&
            state.iteration % config.trace_every_iters == 0) {
            trace_due = true;
        }
        if (config.trace_every_seconds > 0.0 &&
            elapsed_since(start) - last_trace_time >= config.trace_every_seconds) {
            trace_due = true;
        }
        if (!trace_due && state.iteration % 10000 == 0) {
            // Periodic full recompute to bound incremental drift.
            state.cached_predictions = problem.design.predictions(state.weights.values());
        }
        if (trace_due) emit_trace(round_max_eta);

        if (!std::isfinite(round_max_eta)) {
            reason = Termination::diverged;
            break;
        }
        if (round_max_eta < config.tolerance) {
            if (++quiet_rounds >= quiet_rounds_needed) {
                reason = Termination::converged;
                break;
            }
        } else {
            quiet_rounds = 0;
        }
    }

    result.incremental_predictions = state.cached_predictions;
    if (result.trace.back().iteration != state.iteration) emit_trace(round_max_eta);
    result.weights = std::move(state.weights);
    result.reason = reason;
    result.iterations = state.iteration;
    result.final_objective = result.trace.back().objective;
    return result;
}

double infinity2_norm(std::span<const double> v, const Partition& part) {
    if (v.size() != part.num_features()) {
        throw std::invalid_argument("infinity2_norm: length mismatch");
    }
    double sq = 0.0;
    for (std::size_t b = 0; b < part.num_blocks(); ++b) {
        double block_max = 0.0;
        for (std::size_t j : part.block(b)) {
            block_max = std::max(block_max, std::abs(v[j]));
        }
        sq += block_max * block_max;
    }
    return std::sqrt(sq);
}

KktReport kkt_report(const Problem& problem, const WeightVector& w,
                     std::span<const double> cached_predictions,
                     std::span<const double> betas) {
    KktReport report;
    for (std::size_t j = 0; j < problem.num_features(); ++j) {
        if (problem.design.column_empty(j)) continue;
        double g = coordinate_gradient(problem, j, cached_predictions);
        if (w[j] == 0.0) {
            double viol = std::max(0.0, std::abs(g) - problem.lambda) / betas[j];
            report.max_zero_violation = std::max(report.max_zero_violation, viol);
        } else {
            double sign = w[j] > 0.0 ? 1.0 : -1.0;
            double viol = std::abs(g + problem.lambda * sign) / betas[j];
            report.max_nonzero_violation = std::max(report.max_nonzero_violation, viol);
        }
    }
    return report;
}

}  // namespace blockcd
