#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcd/problem.hpp"
#include "blockcd/sparse_matrix.hpp"

namespace blockcd {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dataset {
    SparseColMatrix design;
    std::vector<double> labels;
};

/// LIBSVM text format: "<label> <index>:<value> ..." per line, 1-based
/// strictly increasing indices. p is the max feature index seen, or
/// min_features if that is larger. Malformed lines (non-numeric tokens,
/// non-increasing or duplicate indices, zero or non-finite values) raise
/// ParseError with the line number; an empty file is an error.
Dataset read_libsvm(const std::string& path,
                    std::optional<std::size_t> min_features = std::nullopt);

/// Maps labels {0,1} -> {-1,+1}; labels already in {-1,+1} pass through.
/// Anything else raises ParseError.
void map_labels_for_logistic(std::vector<double>& labels);

void write_libsvm(const SparseColMatrix& m, std::span<const double> labels,
                  const std::string& path);

/// One sampled row of a convergence trace.
struct TraceRecord {
    std::size_t iteration = 0;
    double elapsed_seconds = 0.0;
    double objective = 0.0;
    std::size_t nnz = 0;
    double max_abs_eta = 0.0;
};

/// CSV with header "iteration,elapsed_seconds,objective,nnz,max_abs_eta",
/// full float precision (round-trippable).
void write_trace(std::span<const TraceRecord> records, const std::string& path);
void write_trace(std::span<const TraceRecord> records, std::ostream& out);
std::vector<TraceRecord> read_trace(const std::string& path);

}  // namespace blockcd
