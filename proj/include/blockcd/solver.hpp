#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "blockcd/io.hpp"
#include "blockcd/losses.hpp"
#include "blockcd/partition.hpp"
#include "blockcd/problem.hpp"

namespace blockcd {

struct SolverConfig {
    std::size_t num_blocks = 1;      // B
    std::size_t parallelism = 1;     // P <= B
    BetaPolicy beta_policy = BetaPolicy::per_coordinate;
    double tolerance = 1e-6;         // on max |eta| per round
    std::size_t max_iterations = 100000;
    double max_seconds = 0.0;        // 0 = unlimited
    std::uint64_t rng_seed = 1;
    std::size_t trace_every_iters = 0;    // 0 = off
    double trace_every_seconds = 0.0;     // 0 = off
    unsigned threads = 1;
    bool record_accepted = false;    // keep the full (iteration, j, eta) log
    bool zero_elapsed_in_trace = false;  // deterministic trace bytes
};

/// Minimizer of g*eta + (beta_j/2)*eta^2 + lambda(|w_j+eta| - |w_j|).
struct Proposal {
    std::size_t feature = 0;
    double eta = 0.0;
    double guaranteed_descent = 0.0;  // surrogate value at eta, always <= 0
};

/// Closed-form soft-threshold solution of the one-dimensional surrogate.
Proposal propose_increment(double g, double beta_j, double w_j, double lambda);

/// Uniformly random P-subset of {0..B-1}, sorted ascending. P == B returns
/// the whole set without consuming the generator; P == 1 draws exactly one
/// uniform integer.
std::vector<std::size_t> select_blocks(std::mt19937_64& rng, std::size_t num_blocks,
                                       std::size_t parallelism);

/// Proposal with maximal |eta| (ties to the lowest feature index); nullopt if
/// the list is empty or every eta is 0.
std::optional<Proposal> greedy_accept(std::span<const Proposal> proposals);

struct IterateState {
    WeightVector weights;
    std::vector<double> cached_predictions;  // X w
    double objective = 0.0;
    std::size_t iteration = 0;
};

/// Apply accepted proposals: weights and the cached prediction vector get the
/// incremental updates. Proposals must touch distinct features.
void apply_updates(IterateState& state, const SparseColMatrix& design,
                   std::span<const Proposal> accepted, unsigned threads = 1);

enum class Termination { converged, max_iterations, max_seconds, diverged };

struct AcceptedUpdate {
    std::size_t iteration;
    std::size_t feature;
    double eta;
    double guaranteed_descent;
};

struct SolveResult {
    WeightVector weights;
    std::vector<TraceRecord> trace;
    Termination reason = Termination::max_iterations;
    std::size_t iterations = 0;
    double final_objective = 0.0;
    std::vector<AcceptedUpdate> accepted;  // only when record_accepted
    // prediction vector as maintained incrementally, before the final
    // recompute; lets callers measure accumulated drift
    std::vector<double> incremental_predictions;
};

/// Block-greedy coordinate descent: each round selects P random blocks,
/// proposes an increment for every feature in them from a pre-round snapshot,
/// accepts the best proposal per block, and applies the accepted updates.
/// Converged when max |eta| over selected blocks stays below tolerance for
/// ceil(B/P) consecutive rounds.
SolveResult run(const Problem& problem, const Partition& partition,
                const SolverConfig& config);

/// l_inf within each block, l_2 across blocks.
double infinity2_norm(std::span<const double> v, const Partition& part);

struct KktReport {
    double max_zero_violation = 0.0;     // max over w_j = 0 of (|g_j| - lambda)/beta_j, clamped at 0
    double max_nonzero_violation = 0.0;  // max over w_j != 0 of |g_j + lambda*sign(w_j)|/beta_j
};

/// Optimality certificate for the l1 problem; both values small (relative to
/// the solver tolerance) iff w is a near-minimizer.
KktReport kkt_report(const Problem& problem, const WeightVector& w,
                     std::span<const double> cached_predictions,
                     std::span<const double> betas);

}  // namespace blockcd
