#include "blockcd/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace blockcd {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

struct LineEntries {
    double label;
    // (1-based feature index, value) pairs in file order
    std::vector<std::pair<std::size_t, double>>* entries;
};

// Parse one "<label> <index>:<value> ..." line; validates numeric tokens,
// strictly increasing 1-based indices, finite nonzero values.
void parse_line(const char* s, const std::string& path, std::size_t line_no,
                double& label, std::vector<std::pair<std::size_t, double>>& entries) {
    entries.clear();
    char* end = nullptr;
    errno = 0;
    label = std::strtod(s, &end);
    if (end == s || errno == ERANGE || !std::isfinite(label)) {
        parse_fail(path, line_no, "bad label");
    }
    const char* cur = end;
    std::size_t prev_index = 0;
    for (;;) {
        while (*cur == ' ' || *cur == '\t' || *cur == '\r') ++cur;
        if (*cur == '\0') break;
        errno = 0;
        long long idx = std::strtoll(cur, &end, 10);
        if (end == cur || *end != ':' || idx <= 0 || errno == ERANGE) {
            parse_fail(path, line_no, "bad feature index near '" + std::string(cur).substr(0, 20) + "'");
        }
        cur = end + 1;
        errno = 0;
        double value = std::strtod(cur, &end);
        if (end == cur || errno == ERANGE) {
            parse_fail(path, line_no, "bad feature value");
        }
        if (!std::isfinite(value) || value == 0.0) {
            parse_fail(path, line_no, "zero or non-finite value for feature " +
                                          std::to_string(idx));
        }
        if (static_cast<std::size_t>(idx) <= prev_index) {
            parse_fail(path, line_no, "feature indices not strictly increasing at " +
                                          std::to_string(idx));
        }
        prev_index = static_cast<std::size_t>(idx);
        entries.emplace_back(prev_index, value);
        cur = end;
    }
}

}  // namespace

Dataset read_libsvm(const std::string& path, std::optional<std::size_t> min_features) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    // Two passes: count per-column entries, then fill, so big inputs never
    // reallocate column storage.
    std::vector<double> labels;
    std::vector<std::size_t> col_counts;
    std::size_t max_index = 0;
    std::string line;
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t line_no = 0;
    double label = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        parse_line(line.c_str(), path, line_no, label, entries);
        labels.push_back(label);
        for (const auto& [idx, value] : entries) {
            (void)value;
            if (idx > max_index) {
                max_index = idx;
                if (col_counts.size() < max_index) col_counts.resize(max_index, 0);
            }
            ++col_counts[idx - 1];
        }
    }
    if (labels.empty()) throw ParseError(path + ": empty dataset");

    std::size_t p = max_index;
    if (min_features && *min_features > p) p = *min_features;
    col_counts.resize(p, 0);

    std::vector<std::vector<SparseColMatrix::Entry>> columns(p);
    for (std::size_t j = 0; j < p; ++j) columns[j].reserve(col_counts[j]);

    in.clear();
    in.seekg(0);
    std::size_t row = 0;
    line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        parse_line(line.c_str(), path, line_no, label, entries);
        for (const auto& [idx, value] : entries) {
            columns[idx - 1].push_back(
                {static_cast<std::uint32_t>(row), value});
        }
        ++row;
    }

    Dataset ds;
    ds.design = SparseColMatrix::from_columns(labels.size(), std::move(columns));
    ds.labels = std::move(labels);
    return ds;
}

void map_labels_for_logistic(std::vector<double>& labels) {
    for (double y : labels) {
        if (y != 0.0 && y != 1.0 && y != -1.0) {
            throw ParseError("label " + std::to_string(y) +
                             " not usable for logistic loss (need {0,1} or {-1,+1})");
        }
    }
    for (double& y : labels) {
        if (y == 0.0) y = -1.0;
    }
}

void write_libsvm(const SparseColMatrix& m, std::span<const double> labels,
                  const std::string& path) {
    if (labels.size() != m.rows()) throw IoError("write_libsvm: label length mismatch");
    // Transpose column storage back to row-major lines.
    std::vector<std::vector<std::pair<std::size_t, double>>> row_entries(m.rows());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        auto rows = m.column_rows(j);
        auto vals = m.column_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            row_entries[rows[k]].emplace_back(j + 1, vals[k]);
        }
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    char buf[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::sort(row_entries[i].begin(), row_entries[i].end());
        std::snprintf(buf, sizeof(buf), "%.17g", labels[i]);
        out << buf;
        for (const auto& [idx, value] : row_entries[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", value);
            out << " " << idx << ":" << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_trace(std::span<const TraceRecord> records, std::ostream& out) {
    out << "iteration,elapsed_seconds,objective,nnz,max_abs_eta\n";
    char buf[256];
    for (const TraceRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%zu,%.17g\n", r.iteration,
                      r.elapsed_seconds, r.objective, r.nnz, r.max_abs_eta);
        out << buf;
    }
}

void write_trace(std::span<const TraceRecord> records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_trace(records, out);
    if (!out) throw IoError("write failed: " + path);
}

std::vector<TraceRecord> read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty trace");
    if (line != "iteration,elapsed_seconds,objective,nnz,max_abs_eta") {
        throw ParseError(path + ": bad trace header");
    }
    std::vector<TraceRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TraceRecord r;
        if (std::sscanf(line.c_str(), "%zu,%lg,%lg,%zu,%lg", &r.iteration,
                        &r.elapsed_seconds, &r.objective, &r.nnz, &r.max_abs_eta) != 5) {
            parse_fail(path, line_no, "bad trace row");
        }
        records.push_back(r);
    }
    return records;
}

}  // namespace blockcd
