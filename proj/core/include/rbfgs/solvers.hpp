#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rbfgs/matcore.hpp"
#include "rbfgs/problems.hpp"
#include "rbfgs/sketch.hpp"

namespace rbfgs {

enum class SolverKind { rbfgs, bfgs, gd, nesterov, newton };
enum class StepRule { unit_monotonic, unit_plain, wolfe };
enum class InitialEstimate { identity, scaled_identity, true_inverse_at_x0, custom };
// Point at which the Hessian sketch for B_{k+1} is taken: x_k (pre_step) or
// x_{k+1} (post_step).
enum class HessianPoint { pre_step, post_step };

std::string_view to_string(SolverKind v);
std::string_view to_string(StepRule v);
std::string_view to_string(InitialEstimate v);
std::string_view to_string(HessianPoint v);
// These throw ConfigError on unknown names.
SolverKind parse_solver_kind(std::string_view name);
StepRule parse_step_rule(std::string_view name);
InitialEstimate parse_initial_estimate(std::string_view name);
HessianPoint parse_hessian_point(std::string_view name);

struct WolfeParams {
    double c1 = 1e-4;
    double c2 = 0.9;
    double t_init = 1.0;
    int max_evals = 50;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
    std::shared_ptr<const Problem> problem;
    SketchSpec sketch;
    SolverKind solver = SolverKind::rbfgs;
    StepRule step_rule = StepRule::wolfe;
    InitialEstimate b0 = InitialEstimate::identity;
    std::optional<Matrix> b0_matrix;  // used when b0 == custom
    Vector x0;
    std::size_t max_iters = 1000;
    double grad_tol = 1e-10;
    double gap_floor = 1e-12;
    std::uint64_t seed = 0;
    std::size_t trace_every = 1;
    HessianPoint hessian_point = HessianPoint::pre_step;
    WolfeParams wolfe;
    // Reference value; without it the f_gap column holds f(x_k) and the
    // gap_floor test is disabled.
    std::optional<double> f_star;
    // Hessian at the minimizer; enables the b_err column for rbfgs/bfgs.
    std::optional<SpdMatrix> h_star;
    // Resolved configuration, copied into the trace.
    Metadata metadata;

    // Throws ConfigError.
    void validate() const;
};

struct IterRecord {
    std::size_t iter = 0;
    double time_s = 0.0;
    double f_gap = 0.0;
    double grad_norm = 0.0;
    double step_len = 0.0;
    std::optional<double> b_err;
    std::size_t redraws = 0;

    bool operator==(const IterRecord&) const = default;
};

enum class Termination { grad_tol, max_iters, gap_floor, failure };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view name);

struct Trace {
    Metadata metadata;
    std::vector<IterRecord> records;
    Termination termination = Termination::max_iters;
    std::string failure_reason;
    std::size_t direction_resets = 0;    // non-descent directions replaced by -grad
    std::size_t feasibility_halvings = 0;
    std::size_t skipped_updates = 0;     // classical BFGS curvature skips
    Vector x_final;
    double f_final = 0.0;
};

// Per-iteration callback, for tests and diagnostics.
struct IterationEvent {
    std::size_t k = 0;
    const Vector& x_prev;
    const Vector& x_next;
    const Matrix* b_prev = nullptr;  // null for solvers without an estimate
    const Matrix* b_next = nullptr;
    const SketchSample* sketch = nullptr;
    double step = 0.0;
    bool direction_reset = false;
};
using IterationObserver = std::function<void(const IterationEvent&)>;

Trace rbfgs_run(const RunConfig& config, const IterationObserver& observer = {});
Trace classic_bfgs_run(const RunConfig& config, const IterationObserver& observer = {});
Trace gd_run(const RunConfig& config, const IterationObserver& observer = {});
Trace nesterov_run(const RunConfig& config, const IterationObserver& observer = {});
Trace newton_run(const RunConfig& config, const IterationObserver& observer = {});
// Dispatches on config.solver.
Trace run_solver(const RunConfig& config, const IterationObserver& observer = {});

struct LineSearchResult {
    double t = 0.0;
    double f = 0.0;
    Vector x;
    Vector grad;
    int evals = 0;
    bool strong_wolfe = false;  // false when only Armijo holds
};

// Strong Wolfe step by bracketing and zoom: f(x + t d) <= f(x) + c1 t g^T d and
// |grad f(x + t d)^T d| <= c2 |g^T d|. Points outside the domain count as
// f = +inf. After max_evals the best Armijo point is returned; when no Armijo
// point exists after 50 halvings LineSearchFailure is thrown. The direction
// must satisfy g^T d < 0.
LineSearchResult wolfe_search(const Problem& problem, const Vector& x, double fx, const Vector& gx,
                              const Vector& direction, const WolfeParams& params = {});
LineSearchResult wolfe_search(const Problem& problem, const Vector& x, const Vector& direction,
                              const WolfeParams& params = {});

struct Reference {
    Vector x_star;
    double f_star = 0.0;
    Matrix h_star;
    double grad_norm = 0.0;
};

inline constexpr double kReferenceGradTol = 1e-12;

// Damped Newton with Wolfe steps to grad norm <= 1e-12 (200 iterations at
// most); quadratics return the minimizer x* = 0 directly. Throws
// ReferenceFailure on non-convergence.
Reference reference_solve(const Problem& problem, const std::optional<Vector>& start = std::nullopt);

// lambda_max(H_x) by power iteration over Hessian sketches.
double hessian_norm_estimate(const Problem& problem, const Vector& x);

}  // namespace rbfgs
