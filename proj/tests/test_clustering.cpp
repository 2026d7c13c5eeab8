#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "blockcd/partition.hpp"
#include "test_utils.hpp"

using namespace blockcd;
using namespace blockcd::testing;

namespace {

// B planted groups: within a group, columns share a base direction (all
// pairwise dots nonzero); across groups, columns are orthogonal.
SparseColMatrix planted_design(std::size_t groups, std::size_t per_group) {
    std::size_t p = groups * per_group;
    std::size_t n = 2 * groups;
    std::vector<std::vector<double>> rows(n, std::vector<double>(p, 0.0));
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t k = 0; k < per_group; ++k) {
            std::size_t j = g * per_group + k;
            rows[2 * g][j] = 0.8;
            rows[2 * g + 1][j] = (k % 2 == 0) ? 0.6 : -0.6;
        }
    }
    return from_dense(rows);
}

bool recovers_planted(const Partition& part, std::size_t groups, std::size_t per_group) {
    for (std::size_t g = 0; g < groups; ++g) {
        std::size_t block = part.block_of(g * per_group);
        for (std::size_t k = 1; k < per_group; ++k) {
            if (part.block_of(g * per_group + k) != block) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("partition construction and validation") {
    auto part = Partition::from_assignment({0, 1, 0, 1}, 2);
    CHECK(part.num_blocks() == 2);
    CHECK(part.block(0).size() == 2);
    CHECK(part.block_of(3) == 1);
    CHECK_THROWS_AS(Partition::from_assignment({0, 2}, 2), std::invalid_argument);
}

TEST_CASE("cluster_features") {
    SUBCASE("B = 1 is the single block") {
        std::mt19937_64 rng(1);
        auto m = random_sparse(rng, 10, 6, 0.4);
        auto part = cluster_features(m, 1);
        CHECK(part.num_blocks() == 1);
        CHECK(part.block(0).size() == 6);
    }
    SUBCASE("hand-traced 4-feature instance") {
        // f0=f1 and f2=f3 identical dense pairs, cross-orthogonal, f0 densest
        auto m = from_dense({{1.0, 1.0, 0.0, 0.0},
                             {1.0, 1.0, 0.0, 0.0},
                             {1.0, 1.0, 1.0, 1.0},
                             {0.0, 0.0, 1.0, 1.0}});
        auto part = cluster_features(m, 2);
        CHECK(part.block_of(0) == part.block_of(1));
        CHECK(part.block_of(2) == part.block_of(3));
        CHECK(part.block_of(0) != part.block_of(2));
    }
    SUBCASE("p=5 B=2 splits 3/2") {
        std::mt19937_64 rng(2);
        auto m = random_sparse(rng, 8, 5, 0.5);
        auto part = cluster_features(m, 2);
        std::vector<std::size_t> sizes{part.block(0).size(), part.block(1).size()};
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes == std::vector<std::size_t>{2, 3});
    }
    SUBCASE("valid partition for all B on random inputs") {
        std::mt19937_64 rng(3);
        auto m = random_sparse(rng, 15, 9, 0.3);
        for (std::size_t B = 1; B <= 9; ++B) {
            auto part = cluster_features(m, B);
            CHECK(part.num_blocks() == B);
            std::vector<char> seen(9, 0);
            std::size_t target = (9 + B - 1) / B;
            for (std::size_t b = 0; b < B; ++b) {
                CHECK(part.block(b).size() >= 1);
                CHECK(part.block(b).size() <= target);
                for (std::size_t j : part.block(b)) {
                    CHECK(!seen[j]);
                    seen[j] = 1;
                }
            }
            CHECK(std::count(seen.begin(), seen.end(), 1) == 9);
        }
    }
    SUBCASE("B > p rejected") {
        std::mt19937_64 rng(4);
        auto m = random_sparse(rng, 5, 3, 0.5);
        CHECK_THROWS_AS(cluster_features(m, 4), std::invalid_argument);
    }
    SUBCASE("recovers planted groups") {
        auto m = planted_design(3, 4);
        auto part = cluster_features(m, 3);
        CHECK(recovers_planted(part, 3, 4));
        CHECK(max_cross_block_dot(m, part).value == doctest::Approx(0.0));
    }
}

TEST_CASE("random_partition") {
    std::mt19937_64 rng(5);
    SUBCASE("B = p gives singletons") {
        auto part = random_partition(rng, 6, 6);
        for (std::size_t b = 0; b < 6; ++b) CHECK(part.block(b).size() == 1);
    }
    SUBCASE("B = 1 gives one block") {
        auto part = random_partition(rng, 6, 1);
        CHECK(part.block(0).size() == 6);
    }
    SUBCASE("p=100 B=10 every block exactly 10") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            std::mt19937_64 r(seed);
            auto part = random_partition(r, 100, 10);
            for (std::size_t b = 0; b < 10; ++b) CHECK(part.block(b).size() == 10);
        }
    }
    SUBCASE("deterministic for a seed") {
        std::mt19937_64 a(9), b(9);
        auto pa = random_partition(a, 30, 7);
        auto pb = random_partition(b, 30, 7);
        for (std::size_t j = 0; j < 30; ++j) CHECK(pa.block_of(j) == pb.block_of(j));
    }
}

TEST_CASE("partition_stats") {
    std::mt19937_64 rng(6);
    auto m = random_sparse(rng, 20, 8, 0.4);
    SUBCASE("zero weights means zero active blocks") {
        auto part = Partition::singleton_blocks(8);
        WeightVector w(8);
        auto stats = partition_stats(m, part, &w);
        CHECK(stats.active_blocks.value() == 0);
    }
    SUBCASE("singleton blocks mirror per-column nnz") {
        auto part = Partition::singleton_blocks(8);
        auto stats = partition_stats(m, part);
        for (std::size_t j = 0; j < 8; ++j) CHECK(stats.block_nnz[j] == m.column_nnz(j));
    }
    SUBCASE("uniform dense columns balance exactly") {
        auto dense = from_dense({{1.0, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}});
        auto part = Partition::from_assignment({0, 0, 1, 1}, 2);
        auto stats = partition_stats(dense, part);
        CHECK(stats.max_block_nnz == stats.min_block_nnz);
    }
    SUBCASE("active blocks counts blocks holding nonzero weights") {
        auto part = Partition::from_assignment({0, 0, 1, 1, 2, 2, 3, 3}, 4);
        WeightVector w(8);
        w.set(1, 0.5);
        w.set(6, -0.2);
        auto stats = partition_stats(m, part, &w);
        CHECK(stats.active_blocks.value() == 2);
    }
}

TEST_CASE("max_cross_block_dot") {
    SUBCASE("orthogonal columns give zero") {
        auto m = from_dense({{1.0, 0.0}, {0.0, 1.0}});
        auto part = Partition::singleton_blocks(2);
        CHECK(max_cross_block_dot(m, part).value == 0.0);
    }
    SUBCASE("identical columns split across blocks give 1") {
        auto unit = from_dense({{1.0, 0.0, 1.0, 0.0}, {0.0, 1.0, 0.0, 1.0}});
        auto bad = Partition::from_assignment({0, 0, 1, 1}, 2);
        CHECK(max_cross_block_dot(unit, bad).value == doctest::Approx(1.0));
        auto good = Partition::from_assignment({0, 1, 0, 1}, 2);
        CHECK(max_cross_block_dot(unit, good).value == doctest::Approx(0.0));
    }
}

TEST_CASE("clustering beats random on planted structure") {
    auto m = planted_design(4, 3);
    auto clustered = cluster_features(m, 4);
    double eps_clustered = max_cross_block_dot(m, clustered).value;
    CHECK(eps_clustered == doctest::Approx(0.0));
    int strict = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto rand_part = random_partition(rng, 12, 4);
        double eps_random = max_cross_block_dot(m, rand_part).value;
        if (eps_clustered < eps_random) ++strict;
    }
    CHECK(strict == 20);
}

TEST_CASE("partition serialization round-trips") {
    std::mt19937_64 rng(10);
    auto part = random_partition(rng, 17, 5);
    std::stringstream ss;
    write_partition(part, ss);
    auto back = read_partition(ss);
    CHECK(back.num_blocks() == 5);
    for (std::size_t j = 0; j < 17; ++j) CHECK(back.block_of(j) == part.block_of(j));
}
