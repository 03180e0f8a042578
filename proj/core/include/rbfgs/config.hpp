#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rbfgs/problems.hpp"
#include "rbfgs/sketch.hpp"
#include "rbfgs/solvers.hpp"

namespace rbfgs {

// Experiment description as flat dotted keys ("solver.max_iters") holding
// canonical string values. Every key belongs to a fixed schema; values are
// type-checked on every assignment and cross-key rules are checked by
// validate(). The entries, in schema order, are what traces record.
class ExperimentConfig {
public:
    // All keys with their defaults; required keys without a value are empty.
    ExperimentConfig();

    const Metadata& entries() const noexcept { return entries_; }
    static const std::vector<std::string>& keys();
    static bool is_known(std::string_view key);

    const std::string& get(std::string_view key) const;
    std::string get_string(std::string_view key) const { return get(key); }
    double get_number(std::string_view key) const;
    std::uint64_t get_uint(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    std::vector<std::string> get_list(std::string_view key) const;

    // Parses `value` as the key's type and stores the canonical rendering.
    // Throws ConfigError naming the key.
    void set(std::string_view key, std::string_view value);

    // Cross-key rules (required keys, enum names, tau against dim). Throws
    // ConfigError naming the offending key.
    void validate() const;

    // Directory against which problem.data is resolved.
    std::filesystem::path base_dir;

private:
    Metadata entries_;
};

// A JSON document with optional sections "problem", "sketch", "solver",
// "compare" and "rho"; unknown keys are rejected.
ExperimentConfig load_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Applies "key=value".
void apply_override(ExperimentConfig& config, std::string_view assignment);

// Sketch size for a tau value: an integer, "sqrt_d" (rounded, at least 1) or
// "d".
std::size_t resolve_tau(std::string_view value, std::size_t d);

// Builds the objective, resolving data-dependent entries in `config`
// (problem.dim, problem.samples, problem.reg_coef, solver.x0).
std::shared_ptr<const Problem> build_problem(ExperimentConfig& config);

// RunConfig for `config` on an already built problem. sketch.tau is resolved
// in the recorded metadata.
RunConfig build_run(ExperimentConfig config, std::shared_ptr<const Problem> problem);

// Sets f_star and, when H* is numerically positive definite, h_star.
void attach_reference(RunConfig& run, const Reference& ref);

struct CompareCell {
    SolverKind solver = SolverKind::rbfgs;
    SketchKind sketch = SketchKind::gauss;
    std::size_t tau = 1;
};

// Cells of compare.methods x compare.taus; a single cell from solver.method,
// sketch.kind and sketch.tau when the lists are empty. An entry
// "rbfgs:<sketch>:<tau>" fixes its own tau. Non-sketching methods appear
// once regardless of the tau list.
std::vector<CompareCell> compare_cells(const ExperimentConfig& config, std::size_t d);

// Copy of `config` with the cell's solver, sketch and tau.
ExperimentConfig with_cell(const ExperimentConfig& config, const CompareCell& cell);

}  // namespace rbfgs
