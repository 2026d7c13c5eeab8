#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcd/partition.hpp"
#include "blockcd/sparse_matrix.hpp"

namespace blockcd {

/// Thrown when exact enumeration would exceed the selection budget.
class EnumerationBudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Largest eigenvalue of a symmetric PSD B x B matrix (row-major) by power
/// iteration: 200 iterations or relative change < 1e-12. Deterministic: ones
/// start vector, one restart from an alternating-sign vector if the Rayleigh
/// quotient stalls below the max-diagonal lower bound.
double lambda_max_power(std::span<const double> matrix, std::size_t dim);

constexpr std::size_t kEnumerationBudget = 1000000;

/// Max spectral radius over every one-feature-per-block Gram submatrix.
/// Throws EnumerationBudgetExceeded when the selection count exceeds the
/// budget; requires every block nonempty.
double rho_block_exact(const SparseColMatrix& m, const Partition& part);

/// Running maximum over num_samples uniformly random selections; a lower
/// bound on rho_block.
double rho_block_sampled(const SparseColMatrix& m, const Partition& part,
                         std::size_t num_samples, std::mt19937_64& rng);

/// 1 + (B-1)*epsilon_hat, the correlation upper bound on rho_block.
double prop1_bound(double epsilon_hat, std::size_t num_blocks);

/// (P-1)(rho-1)/(B-1); the convergence guarantee requires this to be < 1.
/// B = 1 forces P = 1 and yields 0.
double theorem1_epsilon(double rho, std::size_t num_blocks, std::size_t parallelism);

struct SpectralReport {
    double rho_estimate = 1.0;
    bool exact = true;  // exact enumeration vs monte carlo
    std::size_t samples_used = 0;
    double epsilon_hat = 0.0;
    bool epsilon_hat_exact = true;
    double prop1 = 1.0;
    struct EpsilonEntry {
        std::size_t parallelism;
        double epsilon;
        bool guarantee;  // epsilon < 1
    };
    std::vector<EpsilonEntry> epsilons;
};

SpectralReport spectral_report(const SparseColMatrix& m, const Partition& part,
                               std::span<const std::size_t> parallelism_values,
                               std::size_t num_samples = 10000,
                               std::uint64_t seed = 1);

/// Flat "key = value" lines.
void write_spectral_report(const SpectralReport& report, std::ostream& out);

}  // namespace blockcd
