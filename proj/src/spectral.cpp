#include "blockcd/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_map>

namespace blockcd {

namespace {

double power_iterate_from(std::span<const double> m, std::size_t dim,
                          std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& x : v) x /= norm;

    std::vector<double> u(dim, 0.0);
    double lambda = 0.0;
    double prev = 0.0;
    for (int it = 0; it < 200; ++it) {
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            const double* row = m.data() + i * dim;
            for (std::size_t j = 0; j < dim; ++j) s += row[j] * v[j];
            u[i] = s;
        }
        lambda = 0.0;  // Rayleigh quotient; v is unit norm
        for (std::size_t i = 0; i < dim; ++i) lambda += v[i] * u[i];
        double unorm = 0.0;
        for (double x : u) unorm += x * x;
        unorm = std::sqrt(unorm);
        if (unorm == 0.0) break;
        for (std::size_t i = 0; i < dim; ++i) v[i] = u[i] / unorm;
        if (it > 0 && std::abs(lambda - prev) <= 1e-12 * std::max(1.0, std::abs(lambda))) {
            break;
        }
        prev = lambda;
    }
    return lambda;
}

}  // namespace

double lambda_max_power(std::span<const double> matrix, std::size_t dim) {
    if (matrix.size() != dim * dim) {
        throw std::invalid_argument("lambda_max_power: size mismatch");
    }
    if (dim == 0) return 0.0;
    if (dim == 1) return matrix[0];

    std::vector<double> ones(dim, 1.0);
    double lambda = power_iterate_from(matrix, dim, std::move(ones));

    double diag_max = 0.0;
    for (std::size_t i = 0; i < dim; ++i) diag_max = std::max(diag_max, matrix[i * dim + i]);
    if (lambda < diag_max - 1e-9) {
        // Ones vector was (near-)orthogonal to the top eigenvector; one
        // deterministic restart from an alternating-sign vector.
        std::vector<double> alt(dim);
        for (std::size_t i = 0; i < dim; ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
        lambda = std::max(lambda, power_iterate_from(matrix, dim, std::move(alt)));
    }
    return lambda;
}

namespace {

// Pairwise dots between features of distinct blocks, cached up front so the
// per-selection work is pure table lookups.
class GramCache {
public:
    explicit GramCache(const SparseColMatrix& m) : m_(m) {}

    double dot(std::size_t i, std::size_t j) const {
        if (i == j) return m_.column_sq_norm(i);
        if (i > j) std::swap(i, j);
        std::uint64_t key = (static_cast<std::uint64_t>(i) << 32) | j;
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double v = m_.column_dot(i, j);
        cache_.emplace(key, v);
        return v;
    }

private:
    const SparseColMatrix& m_;
    mutable std::unordered_map<std::uint64_t, double> cache_;
};

double selection_rho(const GramCache& gram, std::span<const std::size_t> selection) {
    const std::size_t B = selection.size();
    std::vector<double> m(B * B, 0.0);
    for (std::size_t a = 0; a < B; ++a) {
        m[a * B + a] = gram.dot(selection[a], selection[a]);
        for (std::size_t b = a + 1; b < B; ++b) {
            double v = gram.dot(selection[a], selection[b]);
            m[a * B + b] = v;
            m[b * B + a] = v;
        }
    }
    return lambda_max_power(m, B);
}

void check_blocks_nonempty(const Partition& part) {
    for (std::size_t b = 0; b < part.num_blocks(); ++b) {
        if (part.block(b).empty()) {
            throw std::invalid_argument("spectral: block " + std::to_string(b) +
                                        " is empty");
        }
    }
}

}  // namespace

double rho_block_exact(const SparseColMatrix& m, const Partition& part) {
    if (part.num_features() != m.cols()) {
        throw std::invalid_argument("rho_block_exact: partition mismatch");
    }
    check_blocks_nonempty(part);
    const std::size_t B = part.num_blocks();

    std::size_t count = 1;
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t size = part.block(b).size();
        if (count > kEnumerationBudget / size) {
            throw EnumerationBudgetExceeded(
                "rho_block_exact: selection count exceeds budget of " +
                std::to_string(kEnumerationBudget) + "; use rho_block_sampled");
        }
        count *= size;
    }

    GramCache gram(m);
    // Mixed-radix enumeration of one-feature-per-block selections.
    std::vector<std::size_t> digits(B, 0);
    std::vector<std::size_t> selection(B, 0);
    double best = 0.0;
    for (std::size_t s = 0; s < count; ++s) {
        std::size_t rem = s;
        for (std::size_t b = 0; b < B; ++b) {
            std::size_t size = part.block(b).size();
            selection[b] = part.block(b)[rem % size];
            rem /= size;
        }
        best = std::max(best, selection_rho(gram, selection));
    }
    return best;
}

double rho_block_sampled(const SparseColMatrix& m, const Partition& part,
                         std::size_t num_samples, std::mt19937_64& rng) {
    if (part.num_features() != m.cols()) {
        throw std::invalid_argument("rho_block_sampled: partition mismatch");
    }
    check_blocks_nonempty(part);
    if (num_samples == 0) throw std::invalid_argument("rho_block_sampled: need >= 1 sample");
    const std::size_t B = part.num_blocks();
    GramCache gram(m);
    std::vector<std::size_t> selection(B, 0);
    double best = 0.0;
    for (std::size_t s = 0; s < num_samples; ++s) {
        for (std::size_t b = 0; b < B; ++b) {
            auto block = part.block(b);
            std::uniform_int_distribution<std::size_t> dist(0, block.size() - 1);
            selection[b] = block[dist(rng)];
        }
        best = std::max(best, selection_rho(gram, selection));
    }
    return best;
}

double prop1_bound(double epsilon_hat, std::size_t num_blocks) {
    if (epsilon_hat < 0.0) throw std::invalid_argument("prop1_bound: epsilon_hat < 0");
    if (num_blocks == 0) throw std::invalid_argument("prop1_bound: B >= 1 required");
    return 1.0 + static_cast<double>(num_blocks - 1) * epsilon_hat;
}

double theorem1_epsilon(double rho, std::size_t num_blocks, std::size_t parallelism) {
    if (parallelism > num_blocks || parallelism == 0) {
        throw std::invalid_argument("theorem1_epsilon: require 1 <= P <= B");
    }
    if (rho < 1.0) throw std::invalid_argument("theorem1_epsilon: rho >= 1 required");
    if (parallelism == 1 || num_blocks == 1) return 0.0;
    return static_cast<double>(parallelism - 1) * (rho - 1.0) /
           static_cast<double>(num_blocks - 1);
}

SpectralReport spectral_report(const SparseColMatrix& m, const Partition& part,
                               std::span<const std::size_t> parallelism_values,
                               std::size_t num_samples, std::uint64_t seed) {
    SpectralReport report;
    try {
        report.rho_estimate = rho_block_exact(m, part);
        report.exact = true;
        report.samples_used = 0;
    } catch (const EnumerationBudgetExceeded&) {
        std::mt19937_64 rng(seed);
        report.rho_estimate = rho_block_sampled(m, part, num_samples, rng);
        report.exact = false;
        report.samples_used = num_samples;
    }
    CrossBlockDot cross = max_cross_block_dot(m, part, seed);
    report.epsilon_hat = cross.value;
    report.epsilon_hat_exact = cross.exact;
    report.prop1 = prop1_bound(report.epsilon_hat, part.num_blocks());
    for (std::size_t P : parallelism_values) {
        double eps = theorem1_epsilon(std::max(1.0, report.rho_estimate),
                                      part.num_blocks(), P);
        report.epsilons.push_back({P, eps, eps < 1.0});
    }
    return report;
}

void write_spectral_report(const SpectralReport& report, std::ostream& out) {
    out << "rho_estimate = " << report.rho_estimate << "\n";
    out << "method = " << (report.exact ? "exact_enumeration" : "monte_carlo") << "\n";
    out << "samples_used = " << report.samples_used << "\n";
    out << "epsilon_hat = " << report.epsilon_hat << "\n";
    out << "epsilon_hat_exact = " << (report.epsilon_hat_exact ? 1 : 0) << "\n";
    out << "prop1_bound = " << report.prop1 << "\n";
    for (const auto& e : report.epsilons) {
        out << "epsilon[P=" << e.parallelism << "] = " << e.epsilon << "\n";
        out << "guarantee[P=" << e.parallelism << "] = " << (e.guarantee ? 1 : 0) << "\n";
    }
}

}  // namespace blockcd
