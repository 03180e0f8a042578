#include "rbfgs/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "rbfgs/errors.hpp"

namespace rbfgs {
namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Int>
bool parse_integer(std::string_view s, Int& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

struct Token {
    std::string_view text;
    std::size_t column = 0;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i])) ++i;
        if (i > start) out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

std::optional<LabelMapping> infer_mapping(const std::set<double>& seen) {
    static constexpr LabelMapping candidates[] = {{-1.0, 1.0}, {0.0, 1.0}, {1.0, 2.0}};
    for (const LabelMapping& m : candidates) {
        if (std::all_of(seen.begin(), seen.end(), [&](double v) { return v == m.negative || v == m.positive; })) {
            return m;
        }
    }
    return std::nullopt;
}

}  // namespace

Matrix LibsvmDataset::dense() const {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < features.size(); ++j) {
        for (const SparseEntry& e : features[j]) {
            a(static_cast<Eigen::Index>(e.index), static_cast<Eigen::Index>(j)) = e.value;
        }
    }
    return a;
}

Vector LibsvmDataset::label_vector() const {
    return Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
}

LibsvmDataset parse_libsvm(std::istream& in, std::optional<std::size_t> declared_d) {
    LibsvmDataset out;
    std::vector<double> raw_labels;
    std::set<double> seen;
    std::size_t max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::vector<Token> tokens = tokenize(line);
        if (tokens.empty()) continue;

        double label = 0.0;
        if (!parse_double(tokens[0].text, label) || !std::isfinite(label)) {
            throw ParseError("malformed label '" + std::string(tokens[0].text) + "'", line_no, tokens[0].column);
        }
        std::vector<SparseEntry> row;
        row.reserve(tokens.size() - 1);
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const Token& tok = tokens[t];
            const std::size_t colon = tok.text.find(':');
            if (colon == std::string_view::npos) {
                throw ParseError("expected <index>:<value>, got '" + std::string(tok.text) + "'", line_no,
                                 tok.column);
            }
            std::size_t index = 0;
            if (!parse_integer(tok.text.substr(0, colon), index) || index < 1) {
                throw ParseError("malformed feature index", line_no, tok.column);
            }
            double value = 0.0;
            if (!parse_double(tok.text.substr(colon + 1), value) || !std::isfinite(value)) {
                throw ParseError("malformed feature value", line_no, tok.column + colon + 1);
            }
            if (!row.empty() && index - 1 <= row.back().index) {
                throw ParseError("feature indices must be strictly increasing", line_no, tok.column);
            }
            row.push_back({index - 1, value});
            max_index = std::max(max_index, index);
        }
        out.features.push_back(std::move(row));
        raw_labels.push_back(label);
        seen.insert(label);
    }
    if (in.bad()) throw Error("parse_libsvm: read failure");

    out.n = out.features.size();
    out.d = std::max(max_index, declared_d.value_or(0));
    if (out.n > 0) {
        const std::optional<LabelMapping> mapping = infer_mapping(seen);
        if (!mapping) {
            std::string labels;
            for (double v : seen) labels += (labels.empty() ? "" : ", ") + format_double(v);
            throw ParseError("unmappable label set {" + labels + "}", line_no, 1);
        }
        out.mapping = *mapping;
    }
    out.labels.reserve(out.n);
    for (double v : raw_labels) out.labels.push_back(v == out.mapping.positive ? 1.0 : -1.0);
    return out;
}

LibsvmDataset read_libsvm_file(const std::filesystem::path& path, std::optional<std::size_t> declared_d) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open data file " + path.string());
    return parse_libsvm(in, declared_d);
}

void write_libsvm(const LibsvmDataset& data, std::ostream& out) {
    if (data.labels.size() != data.features.size()) throw DimensionMismatch("write_libsvm: label count mismatch");
    for (std::size_t j = 0; j < data.features.size(); ++j) {
        out << (data.labels[j] > 0.0 ? "+1" : "-1");
        for (const SparseEntry& e : data.features[j]) out << ' ' << (e.index + 1) << ':' << format_double(e.value);
        out << '\n';
    }
    if (!out) throw Error("write_libsvm: write failure");
}

void scale_features(Matrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double m = a.row(i).cwiseAbs().maxCoeff();
        if (m > 0.0) a.row(i) /= m;
    }
}

// ------------------------------------------------------------------- traces

void write_trace(const Trace& trace, std::ostream& out) {
    auto meta = [&](std::string_view key, const std::string& value) {
        if (key.find_first_of("=\n") != std::string_view::npos || value.find('\n') != std::string::npos) {
            throw Error("write_trace: metadata may not contain newlines or '=' in keys");
        }
        out << '#' << key << '=' << value << '\n';
    };
    for (const auto& [k, v] : trace.metadata) {
        if (k.rfind("trace.", 0) == 0) throw Error("write_trace: metadata key prefix 'trace.' is reserved");
        meta(k, v);
    }
    meta("trace.termination", std::string(to_string(trace.termination)));
    std::string reason = trace.failure_reason;
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    meta("trace.failure_reason", reason);
    meta("trace.direction_resets", std::to_string(trace.direction_resets));
    meta("trace.feasibility_halvings", std::to_string(trace.feasibility_halvings));
    meta("trace.skipped_updates", std::to_string(trace.skipped_updates));
    meta("trace.f_final", format_double(trace.f_final));
    std::string x;
    for (Eigen::Index i = 0; i < trace.x_final.size(); ++i) x += (i ? " " : "") + format_double(trace.x_final(i));
    meta("trace.x_final", x);

    out << kTraceHeader << '\n';
    for (const IterRecord& r : trace.records) {
        out << r.iter << ',' << format_double(r.time_s) << ',' << format_double(r.f_gap) << ','
            << format_double(r.grad_norm) << ',' << format_double(r.step_len) << ','
            << (r.b_err ? format_double(*r.b_err) : std::string()) << ',' << r.redraws << '\n';
    }
    out.flush();
    if (!out) throw Error("write_trace: write failure");
}

void write_trace_file(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open trace file " + path.string());
    write_trace(trace, out);
}

Trace read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    auto need_double = [&](std::string_view s, std::size_t column) {
        double v = 0.0;
        if (!parse_double(s, v)) throw ParseError("malformed number '" + std::string(s) + "'", line_no, column);
        return v;
    };
    auto need_size = [&](std::string_view s, std::size_t column) {
        std::size_t v = 0;
        if (!parse_integer(s, v)) throw ParseError("malformed count '" + std::string(s) + "'", line_no, column);
        return v;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen && !line.empty() && line[0] == '#') {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) throw ParseError("metadata line without '='", line_no, 1);
            const std::string key = line.substr(1, eq - 1);
            const std::string value = line.substr(eq + 1);
            if (key.rfind("trace.", 0) != 0) {
                trace.metadata.emplace_back(key, value);
                continue;
            }
            const std::size_t col = eq + 2;
            if (key == "trace.termination") {
                try {
                    trace.termination = parse_termination(value);
                } catch (const ConfigError&) {
                    throw ParseError("unknown termination '" + value + "'", line_no, col);
                }
            } else if (key == "trace.failure_reason") {
                trace.failure_reason = value;
            } else if (key == "trace.direction_resets") {
                trace.direction_resets = need_size(value, col);
            } else if (key == "trace.feasibility_halvings") {
                trace.feasibility_halvings = need_size(value, col);
            } else if (key == "trace.skipped_updates") {
                trace.skipped_updates = need_size(value, col);
            } else if (key == "trace.f_final") {
                trace.f_final = need_double(value, col);
            } else if (key == "trace.x_final") {
                std::vector<double> xs;
                for (const Token& t : tokenize(value)) xs.push_back(need_double(t.text, col + t.column - 1));
                trace.x_final = Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
            } else {
                throw ParseError("unknown reserved key '" + key + "'", line_no, 2);
            }
            continue;
        }
        if (!header_seen) {
            if (line != kTraceHeader) throw ParseError("expected header '" + std::string(kTraceHeader) + "'", line_no, 1);
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        std::vector<std::string_view> cells;
        std::vector<std::size_t> columns;
        std::string_view rest(line);
        std::size_t offset = 0;
        while (true) {
            const std::size_t comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            columns.push_back(offset + 1);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
            offset += comma + 1;
        }
        if (cells.size() != 7) throw ParseError("expected 7 columns, got " + std::to_string(cells.size()), line_no, 1);
        IterRecord r;
        r.iter = need_size(cells[0], columns[0]);
        r.time_s = need_double(cells[1], columns[1]);
        r.f_gap = need_double(cells[2], columns[2]);
        r.grad_norm = need_double(cells[3], columns[3]);
        r.step_len = need_double(cells[4], columns[4]);
        if (!cells[5].empty()) r.b_err = need_double(cells[5], columns[5]);
        r.redraws = need_size(cells[6], columns[6]);
        trace.records.push_back(r);
    }
    if (in.bad()) throw Error("read_trace: read failure");
    if (!header_seen) throw ParseError("missing header", line_no + 1, 1);
    return trace;
}

Trace read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file " + path.string());
    return read_trace(in);
}

}  // namespace rbfgs
