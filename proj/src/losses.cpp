#include "blockcd/losses.hpp"

#include <cmath>
#include <string>

namespace blockcd {

namespace {

void check_logistic_label(double y) {
    if (y != 1.0 && y != -1.0) {
        throw std::invalid_argument("logistic loss requires label in {-1,+1}, got " +
                                    std::to_string(y));
    }
}

// sigma(-m) = 1/(1+exp(m)), stable for any m.
double sigmoid_neg(double m) {
    if (m >= 0.0) {
        double e = std::exp(-m);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(m));
}

}  // namespace

double beta_raw(Loss kind) {
    return kind == Loss::squared ? 1.0 : 0.25;
}

double loss_value(Loss kind, double y, double t) {
    if (kind == Loss::squared) {
        double d = y - t;
        return 0.5 * d * d;
    }
    check_logistic_label(y);
    double m = y * t;
    // log(1+exp(-m)) without overflow for large -m
    if (m < 0.0) return -m + std::log1p(std::exp(m));
    return std::log1p(std::exp(-m));
}

double loss_deriv(Loss kind, double y, double t) {
    if (kind == Loss::squared) return t - y;
    check_logistic_label(y);
    return -y * sigmoid_neg(y * t);
}

double objective(const Problem& problem, const WeightVector& w,
                 std::span<const double> cached_predictions) {
    const std::size_t n = problem.num_samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += loss_value(problem.loss, problem.labels[i], cached_predictions[i]);
    }
    double reg = 0.0;
    for (double wj : w.values()) reg += std::abs(wj);
    return sum / static_cast<double>(n) + problem.lambda * reg;
}

double coordinate_gradient(const Problem& problem, std::size_t j,
                           std::span<const double> cached_predictions) {
    const auto rows = problem.design.column_rows(j);
    const auto vals = problem.design.column_values(j);
    double sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::size_t i = rows[k];
        sum += loss_deriv(problem.loss, problem.labels[i], cached_predictions[i]) * vals[k];
    }
    return sum / static_cast<double>(problem.num_samples());
}

std::vector<double> curvature_constants(const Problem& problem, BetaPolicy policy) {
    const double base = beta_raw(problem.loss) / static_cast<double>(problem.num_samples());
    const std::size_t p = problem.num_features();
    std::vector<double> betas(p, base);
    if (policy == BetaPolicy::per_coordinate) {
        for (std::size_t j = 0; j < p; ++j) {
            betas[j] = base * problem.design.column_sq_norm(j);
        }
    }
    return betas;
}

}  // namespace blockcd
