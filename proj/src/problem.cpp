#include "blockcd/problem.hpp"

#include <cmath>
#include <string>

namespace blockcd {

WeightVector::WeightVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight");
        if (v != 0.0) ++nnz_;
    }
}

void WeightVector::set(std::size_t j, double v) {
    if (j >= values_.size()) throw std::invalid_argument("weight index out of range");
    double old = values_[j];
    if (old != 0.0 && v == 0.0) --nnz_;
    if (old == 0.0 && v != 0.0) ++nnz_;
    values_[j] = v;
}

Problem::Problem(SparseColMatrix x, std::vector<double> y, Loss l, double lam)
    : design(std::move(x)), labels(std::move(y)), loss(l), lambda(lam) {
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be finite and >= 0");
    }
    if (labels.size() != design.rows()) {
        throw std::invalid_argument("labels length " + std::to_string(labels.size()) +
                                    " != n = " + std::to_string(design.rows()));
    }
    if (loss == Loss::logistic) {
        for (double yi : labels) {
            if (yi != 1.0 && yi != -1.0) {
                throw std::invalid_argument("logistic loss requires labels in {-1,+1}");
            }
        }
    }
}

}  // namespace blockcd
