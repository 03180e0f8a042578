#include "rbfgs/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rbfgs/errors.hpp"
#include "rbfgs/qn_update.hpp"

namespace rbfgs {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxRedraws = 20;
constexpr int kMaxHalvings = 60;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const Enum (&values)[N], const char* what) {
    for (Enum v : values)
        if (to_string(v) == name) return v;
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

// Collects IterRecords and decides termination.
class Recorder {
public:
    explicit Recorder(const RunConfig& config) : config_(config), start_(Clock::now()) {
        trace_.metadata = config.metadata;
    }

    Trace& trace() { return trace_; }

    double gap(double f) const { return config_.f_star ? f - *config_.f_star : f; }

    void observe(std::size_t k, double f, const Vector& g, double step, const Matrix* b, std::size_t redraws) {
        IterRecord rec;
        rec.iter = k;
        rec.time_s = std::chrono::duration<double>(Clock::now() - start_).count();
        rec.f_gap = gap(f);
        rec.grad_norm = g.norm();
        rec.step_len = step;
        rec.redraws = redraws;
        if (b && config_.h_star) rec.b_err = inverse_error_norm(*b, *config_.h_star);
        last_ = rec;
        if (k % config_.trace_every == 0) trace_.records.push_back(rec);
    }

    // Termination test at the current point, if any criterion holds.
    std::optional<Termination> converged(double f, const Vector& g) const {
        if (g.norm() <= config_.grad_tol) return Termination::grad_tol;
        if (config_.f_star && gap(f) <= config_.gap_floor) return Termination::gap_floor;
        return std::nullopt;
    }

    void finish(Termination why, const Vector& x, double f, std::string reason = {}) {
        if (last_ && (trace_.records.empty() || trace_.records.back().iter != last_->iter)) {
            trace_.records.push_back(*last_);
        }
        trace_.termination = why;
        trace_.failure_reason = std::move(reason);
        trace_.x_final = x;
        trace_.f_final = f;
    }

private:
    const RunConfig& config_;
    Clock::time_point start_;
    Trace trace_;
    std::optional<IterRecord> last_;
};

struct Step {
    Vector x;
    double f = 0.0;
    Vector g;
    double t = 0.0;
    bool reset = false;
};

// One step along `direction` under the configured rule. `unit_t` is the
// trial length used by the unit rules.
Step take_step(const Problem& problem, StepRule rule, const WolfeParams& wolfe, const Vector& x, double f,
               const Vector& g, Vector direction, double unit_t, Trace& trace) {
    Step out;
    if (rule == StepRule::wolfe) {
        if (!(g.dot(direction) < 0.0)) {
            direction = -g;
            out.reset = true;
            ++trace.direction_resets;
        }
        LineSearchResult ls;
        try {
            ls = wolfe_search(problem, x, f, g, direction, wolfe);
        } catch (const LineSearchFailure&) {
            // Numerically useless quasi-Newton direction: retry along -g once.
            if (out.reset) throw;
            out.reset = true;
            ++trace.direction_resets;
            ls = wolfe_search(problem, x, f, g, -g, wolfe);
        }
        out.x = std::move(ls.x);
        out.f = ls.f;
        out.g = std::move(ls.grad);
        out.t = ls.t;
        return out;
    }

    double t = unit_t;
    Vector trial = x + t * direction;
    int halvings = 0;
    while (!problem.in_domain(trial)) {
        if (++halvings > kMaxHalvings) throw DomainError("unit step: no feasible step length after halving");
        t *= 0.5;
        trial = x + t * direction;
        ++trace.feasibility_halvings;
    }
    const double ft = problem.value(trial);
    if (rule == StepRule::unit_monotonic && !(ft <= f)) {
        out.x = x;
        out.f = f;
        out.g = g;
        out.t = 0.0;
        return out;
    }
    out.x = std::move(trial);
    out.f = ft;
    out.g = problem.gradient(out.x);
    out.t = t;
    return out;
}

Matrix initial_estimate(const RunConfig& config) {
    const Problem& p = *config.problem;
    const auto d = static_cast<Eigen::Index>(p.dim());
    switch (config.b0) {
        case InitialEstimate::identity:
            return Matrix::Identity(d, d);
        case InitialEstimate::scaled_identity: {
            const double l = hessian_norm_estimate(p, config.x0);
            if (!(l > 0.0)) throw Error("scaled_identity: Hessian estimate is zero at x0");
            return Matrix::Identity(d, d) / l;
        }
        case InitialEstimate::true_inverse_at_x0:
            return spd_inverse(SpdMatrix(p.full_hessian(config.x0)));
        case InitialEstimate::custom:
            return *config.b0_matrix;
    }
    return Matrix::Identity(d, d);
}

// Runs `body` from x0; any library error ends the trace as a failure at the
// last accepted point.
template <typename Body>
Trace drive(const RunConfig& config, Body&& body) {
    config.validate();
    Recorder rec(config);
    const Problem& p = *config.problem;
    Vector x = config.x0;
    double f = p.value(x);
    Vector g = p.gradient(x);
    try {
        body(rec, x, f, g);
    } catch (const Error& e) {
        rec.finish(Termination::failure, x, f, e.what());
    }
    return std::move(rec.trace());
}

}  // namespace

// ------------------------------------------------------------ enum strings

std::string_view to_string(SolverKind v) {
    switch (v) {
        case SolverKind::rbfgs: return "rbfgs";
        case SolverKind::bfgs: return "bfgs";
        case SolverKind::gd: return "gd";
        case SolverKind::nesterov: return "nesterov";
        case SolverKind::newton: return "newton";
    }
    return "unknown";
}

std::string_view to_string(StepRule v) {
    switch (v) {
        case StepRule::unit_monotonic: return "unit_monotonic";
        case StepRule::unit_plain: return "unit_plain";
        case StepRule::wolfe: return "wolfe";
    }
    return "unknown";
}

std::string_view to_string(InitialEstimate v) {
    switch (v) {
        case InitialEstimate::identity: return "identity";
        case InitialEstimate::scaled_identity: return "scaled_identity";
        case InitialEstimate::true_inverse_at_x0: return "true_inverse_at_x0";
        case InitialEstimate::custom: return "custom";
    }
    return "unknown";
}

std::string_view to_string(HessianPoint v) { return v == HessianPoint::pre_step ? "pre_step" : "post_step"; }

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::grad_tol: return "grad_tol";
        case Termination::max_iters: return "max_iters";
        case Termination::gap_floor: return "gap_floor";
        case Termination::failure: return "failure";
    }
    return "unknown";
}

SolverKind parse_solver_kind(std::string_view name) {
    static constexpr SolverKind all[] = {SolverKind::rbfgs, SolverKind::bfgs, SolverKind::gd, SolverKind::nesterov,
                                         SolverKind::newton};
    return parse_enum(name, all, "solver");
}

StepRule parse_step_rule(std::string_view name) {
    static constexpr StepRule all[] = {StepRule::unit_monotonic, StepRule::unit_plain, StepRule::wolfe};
    return parse_enum(name, all, "step rule");
}

InitialEstimate parse_initial_estimate(std::string_view name) {
    static constexpr InitialEstimate all[] = {InitialEstimate::identity, InitialEstimate::scaled_identity,
                                              InitialEstimate::true_inverse_at_x0, InitialEstimate::custom};
    return parse_enum(name, all, "initial estimate");
}

HessianPoint parse_hessian_point(std::string_view name) {
    static constexpr HessianPoint all[] = {HessianPoint::pre_step, HessianPoint::post_step};
    return parse_enum(name, all, "hessian point");
}

Termination parse_termination(std::string_view name) {
    static constexpr Termination all[] = {Termination::grad_tol, Termination::max_iters, Termination::gap_floor,
                                          Termination::failure};
    return parse_enum(name, all, "termination");
}

void RunConfig::validate() const {
    if (!problem) throw ConfigError("run config: no problem");
    if (static_cast<std::size_t>(x0.size()) != problem->dim()) {
        throw ConfigError("run config: x0 has dimension " + std::to_string(x0.size()) + ", problem has " +
                          std::to_string(problem->dim()));
    }
    if (!problem->in_domain(x0)) throw ConfigError("run config: x0 is outside the problem domain");
    if (max_iters < 1) throw ConfigError("run config: max_iters must be at least 1");
    if (!(grad_tol > 0.0) || !(gap_floor > 0.0)) throw ConfigError("run config: tolerances must be positive");
    if (trace_every < 1) throw ConfigError("run config: trace_every must be at least 1");
    if (!(wolfe.c1 > 0.0 && wolfe.c1 < wolfe.c2 && wolfe.c2 < 1.0)) {
        throw ConfigError("run config: Wolfe constants need 0 < c1 < c2 < 1");
    }
    if (b0 == InitialEstimate::custom) {
        const auto d = static_cast<Eigen::Index>(problem->dim());
        if (!b0_matrix || b0_matrix->rows() != d || b0_matrix->cols() != d) {
            throw ConfigError("run config: custom B0 must be a d x d matrix");
        }
    }
    if (solver == SolverKind::rbfgs) {
        try {
            sketch.validate(problem->dim());
        } catch (const Error& e) {
            throw ConfigError(std::string("run config: ") + e.what());
        }
    }
}

// ------------------------------------------------------------ line search

LineSearchResult wolfe_search(const Problem& problem, const Vector& x, const Vector& direction,
                              const WolfeParams& params) {
    return wolfe_search(problem, x, problem.value(x), problem.gradient(x), direction, params);
}

LineSearchResult wolfe_search(const Problem& problem, const Vector& x, double fx, const Vector& gx,
                              const Vector& direction, const WolfeParams& params) {
    const double dphi0 = gx.dot(direction);
    if (!(dphi0 < 0.0)) throw LineSearchFailure("wolfe_search: direction is not a descent direction");

    struct Point {
        double t = 0.0;
        double f = kInf;
        double dphi = 0.0;
        Vector x;
        Vector g;
        bool feasible = false;
    };

    int evals = 0;
    auto evaluate = [&](double t) {
        ++evals;
        Point p;
        p.t = t;
        p.x = x + t * direction;
        if (!problem.in_domain(p.x)) return p;
        p.f = problem.value(p.x);
        if (!std::isfinite(p.f)) {
            p.f = kInf;
            return p;
        }
        p.g = problem.gradient(p.x);
        p.dphi = p.g.dot(direction);
        p.feasible = true;
        return p;
    };
    auto armijo = [&](const Point& p) { return p.feasible && p.f <= fx + params.c1 * p.t * dphi0; };
    auto curvature = [&](const Point& p) { return std::abs(p.dphi) <= params.c2 * std::abs(dphi0); };

    std::optional<Point> best;
    auto note = [&](const Point& p) {
        if (p.t > 0.0 && armijo(p) && (!best || p.f < best->f)) best = p;
    };
    auto accept = [&](Point p, bool strong) {
        return LineSearchResult{p.t, p.f, std::move(p.x), std::move(p.g), evals, strong};
    };

    auto zoom = [&](Point lo, Point hi) -> std::optional<Point> {
        while (evals < params.max_evals) {
            const double a = std::min(lo.t, hi.t);
            const double b = std::max(lo.t, hi.t);
            if (b - a <= std::numeric_limits<double>::epsilon() * b) return std::nullopt;
            double t = 0.5 * (a + b);
            if (hi.feasible) {
                const double span = hi.t - lo.t;
                const double denom = hi.f - lo.f - lo.dphi * span;
                if (denom > 0.0) {
                    const double q = lo.t - lo.dphi * span * span / (2.0 * denom);
                    if (q > a + 0.1 * (b - a) && q < b - 0.1 * (b - a)) t = q;
                }
            }
            Point cur = evaluate(t);
            note(cur);
            if (!armijo(cur) || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (curvature(cur)) return cur;
                if (cur.dphi * (hi.t - lo.t) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return std::nullopt;
    };

    Point prev;
    prev.t = 0.0;
    prev.f = fx;
    prev.dphi = dphi0;
    prev.x = x;
    prev.g = gx;
    prev.feasible = true;

    double t = params.t_init;
    bool first = true;
    std::optional<Point> found;
    while (evals < params.max_evals) {
        Point cur = evaluate(t);
        note(cur);
        if (!armijo(cur) || (!first && cur.f >= prev.f)) {
            found = zoom(prev, std::move(cur));
            break;
        }
        if (curvature(cur)) return accept(std::move(cur), true);
        if (cur.dphi >= 0.0) {
            found = zoom(std::move(cur), prev);
            break;
        }
        prev = std::move(cur);
        t *= 2.0;
        first = false;
    }
    if (found) return accept(std::move(*found), true);
    if (best) return accept(std::move(*best), false);

    // Last resort: plain Armijo backtracking.
    t = params.t_init;
    for (int i = 0; i < 50; ++i) {
        t *= 0.5;
        Point cur = evaluate(t);
        if (armijo(cur)) return accept(std::move(cur), curvature(cur));
    }
    throw LineSearchFailure("wolfe_search: no step satisfies the sufficient decrease condition");
}

// ------------------------------------------------------------------ solvers

Trace rbfgs_run(const RunConfig& config, const IterationObserver& observer) {
    return drive(config, [&](Recorder& rec, Vector& x, double& f, Vector& g) {
        const Problem& p = *config.problem;
        const std::size_t d = p.dim();
        Rng rng(config.seed);
        Matrix b = initial_estimate(config);
        rec.observe(0, f, g, 0.0, &b, 0);
        for (std::size_t k = 0;; ++k) {
            if (auto done = rec.converged(f, g)) {
                rec.finish(*done, x, f);
                return;
            }
            if (k == config.max_iters) {
                rec.finish(Termination::max_iters, x, f);
                return;
            }
            Step step = take_step(p, config.step_rule, config.wolfe, x, f, g, -(b * g), 1.0, rec.trace());

            const Vector& hess_point = config.hessian_point == HessianPoint::pre_step ? x : step.x;
            std::size_t redraws = 0;
            Matrix b_next;
            SketchSample s;
            for (;;) {
                s = sample(config.sketch, d, rng);
                try {
                    b_next = bfgs_update({b}, s, p.hess_sketch(hess_point, s)).b;
                    break;
                } catch (const RejectedSketch&) {
                    if (++redraws > kMaxRedraws) {
                        throw RejectedSketch("rbfgs: more than 20 rejected sketches in one iteration");
                    }
                }
            }
            if (observer) observer({k, x, step.x, &b, &b_next, &s, step.t, step.reset});
            x = std::move(step.x);
            f = step.f;
            g = std::move(step.g);
            b = std::move(b_next);
            rec.observe(k + 1, f, g, step.t, &b, redraws);
        }
    });
}

Trace classic_bfgs_run(const RunConfig& config, const IterationObserver& observer) {
    return drive(config, [&](Recorder& rec, Vector& x, double& f, Vector& g) {
        const Problem& p = *config.problem;
        Matrix b = initial_estimate(config);
        rec.observe(0, f, g, 0.0, &b, 0);
        for (std::size_t k = 0;; ++k) {
            if (auto done = rec.converged(f, g)) {
                rec.finish(*done, x, f);
                return;
            }
            if (k == config.max_iters) {
                rec.finish(Termination::max_iters, x, f);
                return;
            }
            Step step = take_step(p, config.step_rule, config.wolfe, x, f, g, -(b * g), 1.0, rec.trace());
            ClassicUpdateResult up = classic_bfgs_update({b}, step.x - x, step.g - g);
            if (up.skipped) ++rec.trace().skipped_updates;
            if (observer) observer({k, x, step.x, &b, &up.estimate.b, nullptr, step.t, step.reset});
            x = std::move(step.x);
            f = step.f;
            g = std::move(step.g);
            b = std::move(up.estimate.b);
            rec.observe(k + 1, f, g, step.t, &b, 0);
        }
    });
}

Trace gd_run(const RunConfig& config, const IterationObserver& observer) {
    return drive(config, [&](Recorder& rec, Vector& x, double& f, Vector& g) {
        const Problem& p = *config.problem;
        const double unit_t =
            config.step_rule == StepRule::wolfe ? 1.0 : 1.0 / hessian_norm_estimate(p, config.x0);
        rec.observe(0, f, g, 0.0, nullptr, 0);
        for (std::size_t k = 0;; ++k) {
            if (auto done = rec.converged(f, g)) {
                rec.finish(*done, x, f);
                return;
            }
            if (k == config.max_iters) {
                rec.finish(Termination::max_iters, x, f);
                return;
            }
            Step step = take_step(p, config.step_rule, config.wolfe, x, f, g, -g, unit_t, rec.trace());
            if (observer) observer({k, x, step.x, nullptr, nullptr, nullptr, step.t, step.reset});
            x = std::move(step.x);
            f = step.f;
            g = std::move(step.g);
            rec.observe(k + 1, f, g, step.t, nullptr, 0);
        }
    });
}

Trace nesterov_run(const RunConfig& config, const IterationObserver& observer) {
    return drive(config, [&](Recorder& rec, Vector& x, double& f, Vector& g) {
        const Problem& p = *config.problem;
        const double unit_t =
            config.step_rule == StepRule::wolfe ? 1.0 : 1.0 / hessian_norm_estimate(p, config.x0);
        // Plain steps keep the function monotone only under unit_monotonic.
        const StepRule inner = config.step_rule == StepRule::wolfe ? StepRule::wolfe : StepRule::unit_plain;
        Vector x_prev = x;
        std::size_t momentum_age = 0;
        rec.observe(0, f, g, 0.0, nullptr, 0);
        for (std::size_t k = 0;; ++k) {
            if (auto done = rec.converged(f, g)) {
                rec.finish(*done, x, f);
                return;
            }
            if (k == config.max_iters) {
                rec.finish(Termination::max_iters, x, f);
                return;
            }
            const double beta = static_cast<double>(momentum_age) / static_cast<double>(momentum_age + 3);
            Vector y = x + beta * (x - x_prev);
            std::optional<Step> step;
            if (momentum_age > 0 && p.in_domain(y)) {
                const double fy = p.value(y);
                const Vector gy = p.gradient(y);
                if (gy.norm() > 0.0) {
                    Step trial = take_step(p, inner, config.wolfe, y, fy, gy, -gy, unit_t, rec.trace());
                    if (trial.f <= f) step = std::move(trial);
                }
            }
            if (step) {
                ++momentum_age;
            } else {
                // Restart from x with a plain gradient step.
                momentum_age = 1;
                step = take_step(p, inner, config.wolfe, x, f, g, -g, unit_t, rec.trace());
                if (config.step_rule == StepRule::unit_monotonic && step->f > f) {
                    step = Step{x, f, g, 0.0, false};
                }
            }
            if (observer) observer({k, x, step->x, nullptr, nullptr, nullptr, step->t, step->reset});
            x_prev = x;
            x = std::move(step->x);
            f = step->f;
            g = std::move(step->g);
            rec.observe(k + 1, f, g, step->t, nullptr, 0);
        }
    });
}

Trace newton_run(const RunConfig& config, const IterationObserver& observer) {
    return drive(config, [&](Recorder& rec, Vector& x, double& f, Vector& g) {
        const Problem& p = *config.problem;
        rec.observe(0, f, g, 0.0, nullptr, 0);
        for (std::size_t k = 0;; ++k) {
            if (auto done = rec.converged(f, g)) {
                rec.finish(*done, x, f);
                return;
            }
            if (k == config.max_iters) {
                rec.finish(Termination::max_iters, x, f);
                return;
            }
            Vector direction;
            bool reset = false;
            try {
                direction = -spd_solve(SpdMatrix(p.full_hessian(x)), g);
            } catch (const NotPositiveDefinite&) {
                direction = -g;
                reset = true;
                ++rec.trace().direction_resets;
            }
            Step step = take_step(p, config.step_rule, config.wolfe, x, f, g, direction, 1.0, rec.trace());
            step.reset = step.reset || reset;
            if (observer) observer({k, x, step.x, nullptr, nullptr, nullptr, step.t, step.reset});
            x = std::move(step.x);
            f = step.f;
            g = std::move(step.g);
            rec.observe(k + 1, f, g, step.t, nullptr, 0);
        }
    });
}

Trace run_solver(const RunConfig& config, const IterationObserver& observer) {
    switch (config.solver) {
        case SolverKind::rbfgs: return rbfgs_run(config, observer);
        case SolverKind::bfgs: return classic_bfgs_run(config, observer);
        case SolverKind::gd: return gd_run(config, observer);
        case SolverKind::nesterov: return nesterov_run(config, observer);
        case SolverKind::newton: return newton_run(config, observer);
    }
    throw ConfigError("unknown solver");
}

// ---------------------------------------------------------------- reference

double hessian_norm_estimate(const Problem& problem, const Vector& x) {
    return power_iteration([&](const Vector& v) -> Vector { return problem.hess_sketch(x, {v}).col(0); },
                           problem.dim());
}

Reference reference_solve(const Problem& problem, const std::optional<Vector>& start) {
    Reference out;
    const auto d = static_cast<Eigen::Index>(problem.dim());
    if (dynamic_cast<const QuadraticProblem*>(&problem) != nullptr) {
        out.x_star = Vector::Zero(d);
        out.f_star = 0.0;
        out.h_star = problem.full_hessian(out.x_star);
        out.grad_norm = 0.0;
        return out;
    }

    Vector x = start ? *start : Vector::Zero(d);
    if (!problem.in_domain(x)) throw ReferenceFailure("reference_solve: starting point outside the domain");
    double f = problem.value(x);
    Vector g = problem.gradient(x);
    for (int it = 0; it < 200 && g.norm() > kReferenceGradTol; ++it) {
        Vector direction;
        try {
            direction = -spd_solve(SpdMatrix(problem.full_hessian(x)), g);
        } catch (const NotPositiveDefinite& e) {
            throw ReferenceFailure(std::string("reference_solve: ") + e.what());
        }
        const double decrement = -g.dot(direction);
        const Vector full = x + direction;
        if (decrement < 1e-16 && problem.in_domain(full)) {
            // Inside the quadratic convergence region function differences
            // are below rounding; take the pure Newton step.
            x = full;
            f = problem.value(x);
            g = problem.gradient(x);
            continue;
        }
        try {
            LineSearchResult ls = wolfe_search(problem, x, f, g, direction, {});
            x = std::move(ls.x);
            f = ls.f;
            g = std::move(ls.grad);
        } catch (const LineSearchFailure&) {
            if (!problem.in_domain(full)) throw ReferenceFailure("reference_solve: line search failed");
            const Vector g_full = problem.gradient(full);
            if (!(g_full.norm() < g.norm())) throw ReferenceFailure("reference_solve: stalled above tolerance");
            x = full;
            f = problem.value(x);
            g = g_full;
        }
    }
    out.grad_norm = g.norm();
    if (!(out.grad_norm <= kReferenceGradTol)) {
        throw ReferenceFailure("reference_solve: gradient norm " + std::to_string(out.grad_norm) +
                               " above 1e-12 after 200 iterations");
    }
    out.x_star = x;
    out.f_star = f;
    out.h_star = problem.full_hessian(x);
    return out;
}

}  // namespace rbfgs
