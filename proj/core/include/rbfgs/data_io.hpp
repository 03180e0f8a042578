#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rbfgs/matcore.hpp"
#include "rbfgs/solvers.hpp"

namespace rbfgs {

struct SparseEntry {
    std::size_t index = 0;  // 0-based
    double value = 0.0;

    bool operator==(const SparseEntry&) const = default;
};

// Original label values that were mapped to -1 and +1.
struct LabelMapping {
    double negative = -1.0;
    double positive = 1.0;

    bool operator==(const LabelMapping&) const = default;
};

struct LibsvmDataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::vector<SparseEntry>> features;
    std::vector<double> labels;  // in {-1, +1}
    LabelMapping mapping;

    // d x n matrix whose columns are the samples.
    Matrix dense() const;
    Vector label_vector() const;

    bool operator==(const LibsvmDataset&) const = default;
};

// One sample per line: `<label> <idx>:<val> ...` with 1-based, strictly
// increasing indices. Blank lines are skipped. Label sets {-1,+1}, {0,1} and
// {1,2} are mapped to {-1,+1}. Throws ParseError with line and column.
LibsvmDataset parse_libsvm(std::istream& in, std::optional<std::size_t> declared_d = std::nullopt);
LibsvmDataset read_libsvm_file(const std::filesystem::path& path,
                               std::optional<std::size_t> declared_d = std::nullopt);

// Writes mapped labels as -1/+1 and values with 17 significant digits.
void write_libsvm(const LibsvmDataset& data, std::ostream& out);

// Divides each feature (row) by its largest magnitude so entries lie in
// [-1, 1]. All-zero rows are left alone.
void scale_features(Matrix& a);

inline constexpr const char* kTraceHeader = "iter,time_s,f_gap,grad_norm,step_len,b_err,redraws";

// `#key=value` metadata lines, then run summary lines `#trace.<field>=...`,
// then the header and one row per record. Floats use 17 significant digits.
void write_trace(const Trace& trace, std::ostream& out);
void write_trace_file(const Trace& trace, const std::filesystem::path& path);
// Throws ParseError on a schema mismatch.
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::filesystem::path& path);

}  // namespace rbfgs
