#pragma once

#include <cstddef>
#include <span>

#include "blockcd/problem.hpp"

namespace blockcd {

/// Uniform upper bound on the second derivative of the loss w.r.t. t.
double beta_raw(Loss kind);

/// loss(y, t). Logistic is evaluated overflow-safely for any margin.
double loss_value(Loss kind, double y, double t);

/// d/dt loss(y, t).
double loss_deriv(Loss kind, double y, double t);

/// F(w) + lambda*||w||_1 where F is the mean loss. cached_predictions must be
/// predictions(design, w); the caller owns that contract.
double objective(const Problem& problem, const WeightVector& w,
                 std::span<const double> cached_predictions);

/// j-th entry of grad F(w), touching only the nonzeros of column j.
double coordinate_gradient(const Problem& problem, std::size_t j,
                           std::span<const double> cached_predictions);

/// Per-coordinate curvature constants beta_j used by the proposal step.
/// global: beta_raw/n for every feature (exact bound when columns are
/// unit-normalized); per_coordinate: beta_raw/n * ||X_j||^2.
enum class BetaPolicy { global, per_coordinate };

std::vector<double> curvature_constants(const Problem& problem, BetaPolicy policy);

}  // namespace blockcd
