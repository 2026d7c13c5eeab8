#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "blockcd/problem.hpp"
#include "blockcd/sparse_matrix.hpp"

namespace blockcd {

/// Disjoint assignment of the p features into B blocks.
class Partition {
public:
    Partition() = default;

    /// assignment[j] = block of feature j; every value must be < num_blocks.
    static Partition from_assignment(std::vector<std::size_t> assignment,
                                     std::size_t num_blocks);

    static Partition single_block(std::size_t p);     // B = 1
    static Partition singleton_blocks(std::size_t p); // B = p

    std::size_t num_blocks() const { return blocks_.size(); }
    std::size_t num_features() const { return assignment_.size(); }
    std::size_t block_of(std::size_t j) const { return assignment_[j]; }
    std::span<const std::size_t> block(std::size_t b) const { return blocks_[b]; }
    std::span<const std::size_t> assignment() const { return assignment_; }

private:
    std::vector<std::size_t> assignment_;
    std::vector<std::vector<std::size_t>> blocks_;
};

/// Correlation-seeded clustering heuristic: repeatedly seed with the densest
/// unassigned feature and group the features with the largest absolute inner
/// product against the seed. O(B*p) inner products total.
Partition cluster_features(const SparseColMatrix& m, std::size_t num_blocks);

/// Random permutation chopped into B near-equal contiguous chunks.
Partition random_partition(std::mt19937_64& rng, std::size_t p, std::size_t num_blocks);

struct PartitionStats {
    std::vector<std::size_t> block_nnz;
    std::size_t max_block_nnz = 0;
    std::size_t min_block_nnz = 0;
    double mean_block_nnz = 0.0;
    std::optional<std::size_t> active_blocks;  // blocks holding any nonzero weight
};

PartitionStats partition_stats(const SparseColMatrix& m, const Partition& part,
                               const WeightVector* w = nullptr);

struct CrossBlockDot {
    double value = 0.0;
    bool exact = true;
    std::size_t pairs_checked = 0;
};

/// Max |<X_i, X_j>| over pairs in distinct blocks. Exact for p <= 5000,
/// otherwise a seeded random sample of at least sample_target cross-block
/// pairs (a lower bound on the true maximum).
CrossBlockDot max_cross_block_dot(const SparseColMatrix& m, const Partition& part,
                                  std::uint64_t seed = 1,
                                  std::size_t sample_target = 1000000);

/// Text format: header "# blocks=B features=p", then one "<feature> <block>"
/// line per feature.
void write_partition(const Partition& part, std::ostream& out);
void write_partition_file(const Partition& part, const std::string& path);
Partition read_partition(std::istream& in);
Partition read_partition_file(const std::string& path);

}  // namespace blockcd
