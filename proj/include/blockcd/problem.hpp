#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "blockcd/sparse_matrix.hpp"

namespace blockcd {

enum class Loss { squared, logistic };

/// Dense weight vector with a maintained nonzero count.
class WeightVector {
public:
    WeightVector() = default;
    explicit WeightVector(std::size_t p) : values_(p, 0.0) {}
    explicit WeightVector(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    std::span<const double> values() const { return values_; }

    void set(std::size_t j, double v);
    void add(std::size_t j, double delta) { set(j, values_[j] + delta); }

    std::size_t nnz() const { return nnz_; }

private:
    std::vector<double> values_;
    std::size_t nnz_ = 0;
};

/// One l1-regularized loss minimization instance:
///   min_w (1/n) sum_i loss(y_i, (Xw)_i) + lambda * ||w||_1
struct Problem {
    SparseColMatrix design;
    std::vector<double> labels;
    Loss loss = Loss::squared;
    double lambda = 0.0;

    Problem() = default;
    Problem(SparseColMatrix x, std::vector<double> y, Loss l, double lam);

    std::size_t num_samples() const { return design.rows(); }
    std::size_t num_features() const { return design.cols(); }
};

}  // namespace blockcd
