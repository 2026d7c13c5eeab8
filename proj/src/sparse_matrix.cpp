#include "blockcd/sparse_matrix.hpp"

#include <atomic>
#include <cmath>
#include <utility>

namespace blockcd {

SparseColMatrix SparseColMatrix::from_columns(std::size_t n_rows,
                                              std::vector<std::vector<Entry>> columns) {
    SparseColMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = columns.size();
    m.col_ptr_.assign(m.n_cols_ + 1, 0);

    std::size_t total = 0;
    for (const auto& col : columns) total += col.size();
    m.row_idx_.reserve(total);
    m.values_.reserve(total);
    m.col_sq_norm_.reserve(m.n_cols_);

    for (std::size_t j = 0; j < m.n_cols_; ++j) {
        const auto& col = columns[j];
        double sq = 0.0;
        std::int64_t prev = -1;
        for (const Entry& e : col) {
            if (e.row >= n_rows) {
                throw std::invalid_argument("row index " + std::to_string(e.row) +
                                            " out of range in column " + std::to_string(j));
            }
            if (static_cast<std::int64_t>(e.row) <= prev) {
                throw std::invalid_argument("row indices not strictly increasing in column " +
                                            std::to_string(j));
            }
            if (!std::isfinite(e.value) || e.value == 0.0) {
                throw std::invalid_argument("non-finite or zero value in column " +
                                            std::to_string(j));
            }
            prev = e.row;
            m.row_idx_.push_back(e.row);
            m.values_.push_back(e.value);
            sq += e.value * e.value;
        }
        m.col_ptr_[j + 1] = m.row_idx_.size();
        m.col_sq_norm_.push_back(sq);
    }
    return m;
}

double SparseColMatrix::column_dot(std::size_t i, std::size_t j) const {
    check_col(i);
    check_col(j);
    // Canonical order so (i,j) and (j,i) run the identical merge.
    if (i > j) std::swap(i, j);
    if (i == j) return col_sq_norm_[i];

    std::size_t a = col_ptr_[i], a_end = col_ptr_[i + 1];
    std::size_t b = col_ptr_[j], b_end = col_ptr_[j + 1];
    double sum = 0.0;
    while (a < a_end && b < b_end) {
        std::uint32_t ra = row_idx_[a], rb = row_idx_[b];
        if (ra == rb) {
            sum += values_[a] * values_[b];
            ++a;
            ++b;
        } else if (ra < rb) {
            ++a;
        } else {
            ++b;
        }
    }
    return sum;
}

std::vector<double> SparseColMatrix::predictions(std::span<const double> w) const {
    if (w.size() != n_cols_) {
        throw std::invalid_argument("weight vector length " + std::to_string(w.size()) +
                                    " != p = " + std::to_string(n_cols_));
    }
    std::vector<double> out(n_rows_, 0.0);
    for (std::size_t j = 0; j < n_cols_; ++j) {
        double wj = w[j];
        if (wj == 0.0) continue;
        for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            out[row_idx_[k]] += wj * values_[k];
        }
    }
    return out;
}

void SparseColMatrix::add_scaled_column(std::size_t j, double eta,
                                        std::span<double> out) const {
    check_col(j);
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
        out[row_idx_[k]] += eta * values_[k];
    }
}

void SparseColMatrix::add_scaled_column_atomic(std::size_t j, double eta,
                                               std::span<double> out) const {
    check_col(j);
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
        std::atomic_ref<double> cell(out[row_idx_[k]]);
        cell.fetch_add(eta * values_[k], std::memory_order_relaxed);
    }
}

NormalizeResult SparseColMatrix::normalize_columns() const {
    NormalizeResult r;
    r.matrix = *this;
    r.scales.assign(n_cols_, 1.0);
    r.empty_column.assign(n_cols_, 0);
    for (std::size_t j = 0; j < n_cols_; ++j) {
        if (column_empty(j)) {
            r.empty_column[j] = 1;
            continue;
        }
        double norm = std::sqrt(col_sq_norm_[j]);
        r.scales[j] = norm;
        double inv = 1.0 / norm;
        for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            r.matrix.values_[k] *= inv;
        }
        double sq = 0.0;
        for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            sq += r.matrix.values_[k] * r.matrix.values_[k];
        }
        r.matrix.col_sq_norm_[j] = sq;
    }
    return r;
}

}  // namespace blockcd
