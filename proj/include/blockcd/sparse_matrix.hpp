#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockcd {

struct NormalizeResult;

/// Compressed sparse-column matrix. Immutable after construction; all solver
/// and clustering kernels traverse feature columns, so this is the only
/// storage layout we support.
class SparseColMatrix {
public:
    struct Entry {
        std::uint32_t row;
        double value;
    };

    SparseColMatrix() = default;

    /// Build from per-column entry lists. Entries in each column must have
    /// strictly increasing row indices, finite nonzero values, and rows
    /// < n_rows. Throws std::invalid_argument otherwise.
    static SparseColMatrix from_columns(std::size_t n_rows,
                                        std::vector<std::vector<Entry>> columns);

    std::size_t rows() const { return n_rows_; }
    std::size_t cols() const { return n_cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::size_t column_nnz(std::size_t j) const {
        check_col(j);
        return col_ptr_[j + 1] - col_ptr_[j];
    }
    bool column_empty(std::size_t j) const { return column_nnz(j) == 0; }

    std::span<const std::uint32_t> column_rows(std::size_t j) const {
        check_col(j);
        return {row_idx_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
    }
    std::span<const double> column_values(std::size_t j) const {
        check_col(j);
        return {values_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
    }

    /// Cached sum of squared stored values of column j.
    double column_sq_norm(std::size_t j) const {
        check_col(j);
        return col_sq_norm_[j];
    }

    /// Sparse merge inner product of columns i and j. Symmetric: the pair is
    /// canonically ordered so both argument orders take the same path.
    double column_dot(std::size_t i, std::size_t j) const;

    /// X * w as a dense vector of length n_rows.
    std::vector<double> predictions(std::span<const double> w) const;

    /// out += eta * column j.
    void add_scaled_column(std::size_t j, double eta, std::span<double> out) const;

    /// Same, but each scalar addition is atomic (for concurrent writers).
    void add_scaled_column_atomic(std::size_t j, double eta, std::span<double> out) const;

    /// Rescale every nonempty column to unit l2 norm. Returns the per-column
    /// scale factors so solutions can be mapped back (w_orig = w_scaled / scale).
    NormalizeResult normalize_columns() const;

private:
    void check_col(std::size_t j) const {
        if (j >= n_cols_) {
            throw std::invalid_argument("column index " + std::to_string(j) +
                                        " out of range (p=" + std::to_string(n_cols_) + ")");
        }
    }

    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::size_t> col_ptr_;   // size n_cols_ + 1
    std::vector<std::uint32_t> row_idx_;
    std::vector<double> values_;
    std::vector<double> col_sq_norm_;
};

struct NormalizeResult {
    SparseColMatrix matrix;
    std::vector<double> scales;      // original l2 norm per column (1.0 for empty)
    std::vector<char> empty_column;  // flagged, not scaled
};

}  // namespace blockcd
