#include "blockcd/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace blockcd {

Partition Partition::from_assignment(std::vector<std::size_t> assignment,
                                     std::size_t num_blocks) {
    if (num_blocks == 0) throw std::invalid_argument("Partition: need at least one block");
    Partition part;
    part.blocks_.resize(num_blocks);
    for (std::size_t j = 0; j < assignment.size(); ++j) {
        if (assignment[j] >= num_blocks) {
            throw std::invalid_argument("Partition: block index out of range for feature " +
                                        std::to_string(j));
        }
        part.blocks_[assignment[j]].push_back(j);
    }
    part.assignment_ = std::move(assignment);
    return part;
}

Partition Partition::single_block(std::size_t p) {
    return from_assignment(std::vector<std::size_t>(p, 0), 1);
}

Partition Partition::singleton_blocks(std::size_t p) {
    std::vector<std::size_t> assignment(p);
    std::iota(assignment.begin(), assignment.end(), 0);
    return from_assignment(std::move(assignment), p);
}

namespace {

constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

void parallel_abs_dots(const SparseColMatrix& m, std::size_t seed_feature,
                       const std::vector<std::size_t>& unassigned,
                       std::vector<double>& c) {
    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            c[k] = std::abs(m.column_dot(seed_feature, unassigned[k]));
        }
    };
    const std::size_t count = unassigned.size();
    unsigned hw = std::thread::hardware_concurrency();
    if (count < 8192 || hw < 2) {
        worker(0, count);
        return;
    }
    unsigned nt = std::min<unsigned>(hw, 8);
    std::vector<std::thread> pool;
    std::size_t chunk = (count + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

Partition cluster_features(const SparseColMatrix& m, std::size_t num_blocks) {
    const std::size_t p = m.cols();
    if (num_blocks < 1 || num_blocks > p) {
        throw std::invalid_argument("cluster_features: require 1 <= B <= p");
    }
    std::vector<std::size_t> assignment(p, kUnassigned);
    std::vector<std::size_t> unassigned(p);
    std::iota(unassigned.begin(), unassigned.end(), 0);

    const std::size_t target = (p + num_blocks - 1) / num_blocks;  // ceil(p/B)
    std::vector<double> c;

    for (std::size_t b = 0; b + 1 < num_blocks; ++b) {
        // Seed: densest unassigned feature, ties to the lowest index.
        std::size_t seed = unassigned[0];
        for (std::size_t j : unassigned) {
            if (m.column_nnz(j) > m.column_nnz(seed)) seed = j;
        }

        c.assign(unassigned.size(), 0.0);
        parallel_abs_dots(m, seed, unassigned, c);

        // Never leave a later block without features.
        std::size_t blocks_left = num_blocks - b - 1;
        std::size_t take = std::min(target, unassigned.size() - blocks_left);

        // Partial selection of the top-`take` by c_j, ties to the lowest index.
        std::vector<std::size_t> order(unassigned.size());
        std::iota(order.begin(), order.end(), 0);
        auto better = [&](std::size_t a, std::size_t bb) {
            if (c[a] != c[bb]) return c[a] > c[bb];
            return unassigned[a] < unassigned[bb];
        };
        std::nth_element(order.begin(), order.begin() + (take - 1), order.end(), better);
        order.resize(take);

        // Force the seed into its own block.
        bool has_seed = false;
        for (std::size_t k : order) {
            if (unassigned[k] == seed) {
                has_seed = true;
                break;
            }
        }
        if (!has_seed) {
            std::size_t worst = 0;
            for (std::size_t i = 1; i < order.size(); ++i) {
                if (better(order[worst], order[i])) worst = i;
            }
            for (std::size_t k = 0; k < unassigned.size(); ++k) {
                if (unassigned[k] == seed) {
                    order[worst] = k;
                    break;
                }
            }
        }

        for (std::size_t k : order) assignment[unassigned[k]] = b;
        std::vector<std::size_t> rest;
        rest.reserve(unassigned.size() - take);
        for (std::size_t j : unassigned) {
            if (assignment[j] == kUnassigned) rest.push_back(j);
        }
        unassigned = std::move(rest);
    }
    for (std::size_t j : unassigned) assignment[j] = num_blocks - 1;
    return Partition::from_assignment(std::move(assignment), num_blocks);
}

Partition random_partition(std::mt19937_64& rng, std::size_t p, std::size_t num_blocks) {
    if (num_blocks < 1 || num_blocks > p) {
        throw std::invalid_argument("random_partition: require 1 <= B <= p");
    }
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<std::size_t> assignment(p, 0);
    std::size_t base = p / num_blocks;
    std::size_t rem = p % num_blocks;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < num_blocks; ++b) {
        std::size_t size = base + (b < rem ? 1 : 0);
        for (std::size_t k = 0; k < size; ++k) assignment[perm[pos++]] = b;
    }
    return Partition::from_assignment(std::move(assignment), num_blocks);
}

PartitionStats partition_stats(const SparseColMatrix& m, const Partition& part,
                               const WeightVector* w) {
    if (part.num_features() != m.cols()) {
        throw std::invalid_argument("partition_stats: partition does not cover the matrix");
    }
    PartitionStats stats;
    const std::size_t B = part.num_blocks();
    stats.block_nnz.assign(B, 0);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t j : part.block(b)) stats.block_nnz[b] += m.column_nnz(j);
    }
    stats.max_block_nnz = *std::max_element(stats.block_nnz.begin(), stats.block_nnz.end());
    stats.min_block_nnz = *std::min_element(stats.block_nnz.begin(), stats.block_nnz.end());
    stats.mean_block_nnz =
        static_cast<double>(std::accumulate(stats.block_nnz.begin(), stats.block_nnz.end(),
                                            std::size_t{0})) /
        static_cast<double>(B);
    if (w != nullptr) {
        std::size_t active = 0;
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j : part.block(b)) {
                if ((*w)[j] != 0.0) {
                    ++active;
                    break;
                }
            }
        }
        stats.active_blocks = active;
    }
    return stats;
}

CrossBlockDot max_cross_block_dot(const SparseColMatrix& m, const Partition& part,
                                  std::uint64_t seed, std::size_t sample_target) {
    if (part.num_features() != m.cols()) {
        throw std::invalid_argument("max_cross_block_dot: partition mismatch");
    }
    const std::size_t p = m.cols();
    CrossBlockDot out;
    if (part.num_blocks() < 2) return out;
    if (p <= 5000) {
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                if (part.block_of(i) == part.block_of(j)) continue;
                out.value = std::max(out.value, std::abs(m.column_dot(i, j)));
                ++out.pairs_checked;
            }
        }
        return out;
    }
    out.exact = false;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, p - 1);
    while (out.pairs_checked < sample_target) {
        std::size_t i = dist(rng);
        std::size_t j = dist(rng);
        if (i == j || part.block_of(i) == part.block_of(j)) continue;
        out.value = std::max(out.value, std::abs(m.column_dot(i, j)));
        ++out.pairs_checked;
    }
    return out;
}

void write_partition(const Partition& part, std::ostream& out) {
    out << "# blocks=" << part.num_blocks() << " features=" << part.num_features() << "\n";
    for (std::size_t j = 0; j < part.num_features(); ++j) {
        out << j << " " << part.block_of(j) << "\n";
    }
}

void write_partition_file(const Partition& part, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_partition(part, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Partition read_partition(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty partition file");
    std::size_t num_blocks = 0, p = 0;
    if (std::sscanf(header.c_str(), "# blocks=%zu features=%zu", &num_blocks, &p) != 2) {
        throw std::runtime_error("bad partition header: " + header);
    }
    std::vector<std::size_t> assignment(p, static_cast<std::size_t>(-1));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t j = 0, b = 0;
        if (std::sscanf(line.c_str(), "%zu %zu", &j, &b) != 2 || j >= p) {
            throw std::runtime_error("bad partition line: " + line);
        }
        assignment[j] = b;
    }
    for (std::size_t j = 0; j < p; ++j) {
        if (assignment[j] == static_cast<std::size_t>(-1)) {
            throw std::runtime_error("partition file missing feature " + std::to_string(j));
        }
    }
    return Partition::from_assignment(std::move(assignment), num_blocks);
}

Partition read_partition_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_partition(in);
}

}  // namespace blockcd
