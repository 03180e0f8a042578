#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "rbfgs/config.hpp"
#include "rbfgs/data_io.hpp"
#include "rbfgs/diagnostics.hpp"
#include "rbfgs/errors.hpp"
#include "rbfgs/solvers.hpp"

namespace rbfgs::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    bool quiet = false;
    std::string fault;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ExperimentConfig load(const Options& opt) {
    if (opt.config.empty()) throw ConfigError("--config: a configuration file is required");
    ExperimentConfig cfg = load_config_file(opt.config);
    for (const std::string& s : opt.sets) apply_override(cfg, s);
    if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
    cfg.validate();
    return cfg;
}

fs::path experiment_dir(const Options& opt, const ExperimentConfig& cfg) {
    fs::path dir = fs::path(opt.out) / cfg.get("name");
    fs::create_directories(dir);
    return dir;
}

void write_metadata(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) os << '#' << k << '=' << v << '\n';
}

std::string trace_name(const ExperimentConfig& cfg) {
    const bool sketched = cfg.get("solver.method") == "rbfgs";
    return cfg.get("name") + "_" + cfg.get("solver.method") + "_" + (sketched ? cfg.get("sketch.kind") : "none") +
           "_" + (sketched ? cfg.get("sketch.tau") : "0") + ".csv";
}

std::string method_label(const ExperimentConfig& cfg) {
    if (cfg.get("solver.method") != "rbfgs") return cfg.get("solver.method");
    return "rbfgs:" + cfg.get("sketch.kind") + ":" + cfg.get("sketch.tau");
}

struct RunOutcome {
    Trace trace;
    double wall_s = 0.0;
    fs::path path;
    std::string label;
};

RunOutcome run_cell(const ExperimentConfig& cfg, const std::shared_ptr<const Problem>& problem,
                    const std::optional<Reference>& ref, const fs::path& dir) {
    RunConfig run = build_run(cfg, problem);
    if (ref) attach_reference(run, *ref);
    RunOutcome out;
    const auto start = Clock::now();
    out.trace = run_solver(run);
    out.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
    ExperimentConfig resolved = cfg;
    resolved.set("sketch.tau", std::to_string(run.sketch.tau));
    out.path = dir / trace_name(resolved);
    out.label = method_label(resolved);
    write_trace_file(out.trace, out.path);
    return out;
}

std::optional<Reference> try_reference(const Problem& problem, std::ostream& err, bool quiet) {
    try {
        return reference_solve(problem);
    } catch (const ReferenceFailure& e) {
        if (!quiet) err << "warning: reference solve failed (" << e.what() << "); f_gap holds f(x)\n";
        return std::nullopt;
    }
}

// ------------------------------------------------------------------ run

int cmd_run(const Options& opt, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = load(opt);
    auto problem = build_problem(cfg);
    const std::optional<Reference> ref = try_reference(*problem, err, opt.quiet);
    const fs::path dir = experiment_dir(opt, cfg);
    const RunOutcome r = run_cell(cfg, problem, ref, dir);
    const IterRecord* last = r.trace.records.empty() ? nullptr : &r.trace.records.back();
    if (!opt.quiet) {
        out << "trace: " << r.path.string() << '\n';
        out << "termination: " << to_string(r.trace.termination) << '\n';
        out << "iterations: " << (last ? last->iter : 0) << '\n';
        out << (ref ? "final f_gap: " : "final f: ") << num(last ? last->f_gap : r.trace.f_final) << '\n';
        out << "wall time (s): " << short_num(r.wall_s) << '\n';
    }
    if (r.trace.termination == Termination::failure) {
        err << "error: run failed: " << r.trace.failure_reason << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

// -------------------------------------------------------------- compare

struct SummaryRow {
    std::string label;
    std::string file;
    std::optional<std::size_t> iters_to_target;
    std::optional<double> time_to_target;
    std::size_t iterations = 0;
    double final_gap = 0.0;
    double wall_s = 0.0;
    std::string termination;
};

SummaryRow summarize(const RunOutcome& r, double target) {
    SummaryRow row;
    row.label = r.label;
    row.file = r.path.filename().string();
    row.termination = std::string(to_string(r.trace.termination));
    row.wall_s = r.wall_s;
    if (r.trace.records.empty()) return row;
    const double threshold = target * r.trace.records.front().f_gap;
    for (const IterRecord& rec : r.trace.records) {
        if (rec.f_gap <= threshold) {
            row.iters_to_target = rec.iter;
            row.time_to_target = rec.time_s;
            break;
        }
    }
    row.iterations = r.trace.records.back().iter;
    row.final_gap = r.trace.records.back().f_gap;
    return row;
}

int cmd_compare(const Options& opt, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = load(opt);
    auto problem = build_problem(cfg);
    Reference ref;
    try {
        ref = reference_solve(*problem);
    } catch (const ReferenceFailure& e) {
        err << "error: reference solve failed, no runs started: " << e.what() << '\n';
        return kExitFailure;
    }
    const fs::path dir = experiment_dir(opt, cfg);
    const std::vector<CompareCell> cells = compare_cells(cfg, problem->dim());
    std::vector<ExperimentConfig> cell_cfgs;
    for (const CompareCell& c : cells) {
        cell_cfgs.push_back(with_cell(cfg, c));
        build_run(cell_cfgs.back(), problem);  // surface config errors before any run
    }

    std::vector<std::optional<RunOutcome>> results(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_cell(cell_cfgs[i], problem, ref, dir);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(cells.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }

    const double target = cfg.get_number("compare.target");
    std::vector<SummaryRow> rows;
    bool failed = false;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!results[i]) {
            err << "error: cell " << method_label(cell_cfgs[i]) << " failed: " << errors[i] << '\n';
            failed = true;
            continue;
        }
        failed = failed || results[i]->trace.termination == Termination::failure;
        rows.push_back(summarize(*results[i], target));
    }

    std::ofstream summary(dir / "summary.csv");
    write_metadata(summary, cfg.entries());
    summary << "#reference.f_star=" << num(ref.f_star) << '\n';
    summary << "method,trace,iterations_to_target,time_to_target_s,iterations,final_f_gap,wall_time_s,termination\n";
    for (const SummaryRow& r : rows) {
        summary << r.label << ',' << r.file << ','
                << (r.iters_to_target ? std::to_string(*r.iters_to_target) : std::string()) << ','
                << (r.time_to_target ? num(*r.time_to_target) : std::string()) << ',' << r.iterations << ','
                << num(r.final_gap) << ',' << num(r.wall_s) << ',' << r.termination << '\n';
    }

    std::ostringstream table;
    table << "target: f_gap <= " << short_num(target) << " * initial gap\n";
    table << "reference f*: " << num(ref.f_star) << " (grad norm " << short_num(ref.grad_norm) << ")\n\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %12s %14s %12s %14s %s\n", "method", "iters@target", "time@target(s)",
                  "iterations", "final f_gap", "termination");
    table << line;
    for (const SummaryRow& r : rows) {
        std::snprintf(line, sizeof line, "%-24s %12s %14s %12zu %14.6g %s\n", r.label.c_str(),
                      r.iters_to_target ? std::to_string(*r.iters_to_target).c_str() : "-",
                      r.time_to_target ? short_num(*r.time_to_target).c_str() : "-", r.iterations, r.final_gap,
                      r.termination.c_str());
        table << line;
    }
    std::ofstream report(dir / "report.txt");
    write_metadata(report, cfg.entries());
    report << '\n' << table.str();
    if (!opt.quiet) out << table.str() << "summary: " << (dir / "summary.csv").string() << '\n';
    return failed ? kExitFailure : kExitOk;
}

// ------------------------------------------------------------------ rho

std::vector<Vector> probe_points(const Problem& problem, const Vector& x0, const Vector& x_star, std::size_t count,
                                 double scale, std::uint64_t seed) {
    std::vector<Vector> probes{x_star};
    if (count > 1) probes.push_back(x0);
    Rng rng(seed);
    std::normal_distribution<double> normal;
    const auto d = x_star.size();
    while (probes.size() < count) {
        Vector dir(d);
        for (Eigen::Index i = 0; i < d; ++i) dir(i) = normal(rng);
        double s = scale / std::sqrt(static_cast<double>(d));
        Vector x = x_star + s * dir;
        for (int k = 0; k < 60 && !problem.in_domain(x); ++k) {
            s *= 0.5;
            x = x_star + s * dir;
        }
        if (!problem.in_domain(x)) throw DomainError("rho: could not place a probe inside the domain");
        probes.push_back(std::move(x));
    }
    return probes;
}

int cmd_rho(const Options& opt, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = load(opt);
    cfg.set("solver.method", "rbfgs");
    auto problem = build_problem(cfg);
    const RunConfig run = build_run(cfg, problem);
    const Reference ref = reference_solve(*problem);
    const std::vector<Vector> probes = probe_points(*problem, run.x0, ref.x_star, cfg.get_uint("rho.probes"),
                                                    cfg.get_number("rho.probe_scale"), cfg.get_uint("seed"));
    Metadata rows;
    auto row = [&](const std::string& k, const std::string& v) { rows.emplace_back(k, v); };

    const auto* glm = dynamic_cast<const GlmProblem*>(problem.get());
    const auto* barrier = dynamic_cast<const LogBarrierProblem*>(problem.get());
    CurvatureBounds bounds{1.0, 1.0};
    if (glm) bounds = curvature_bounds(*glm, probes);
    if (barrier) bounds = curvature_bounds(*barrier, probes);

    std::optional<double> rho;
    Rng rng(cfg.get_uint("seed"));
    try {
        const RhoReport rep = rho_at(*problem, probes, run.sketch, cfg.get_uint("rho.mc_samples"), rng);
        rho = rep.rho;
        row("rho", num(rep.rho));
        row("rho_method", std::string(to_string(rep.method)));
        row("rho_samples", std::to_string(rep.samples));
        if (rep.std_err) row("rho_std_err", num(*rep.std_err));
        for (std::size_t i = 0; i < rep.per_point.size(); ++i) row("rho_probe_" + std::to_string(i), num(rep.per_point[i]));
    } catch (const NotPositiveDefinite& e) {
        row("rho_dense", std::string("unavailable: ") + e.what());
    }

    const bool structured = run.sketch.kind == SketchKind::svd && run.sketch.tau == 1 &&
                            (problem->family() == "quadratic" || (glm && glm->reg() == 0.0));
    if (structured) {
        double worst = 1.0;
        SvdRho s;
        for (const Vector& x : probes) {
            const Vector w = glm ? glm->curvatures(x) : Vector::Ones(static_cast<Eigen::Index>(problem->dim()));
            s = svd_sketch_rho(problem->sketch_data_matrix(), w, cfg.get_number("sketch.svd_tol"));
            worst = std::min(worst, s.rho);
        }
        row("rho_svd_structured", num(worst));
        row("svd_rank", std::to_string(s.rank));
        if (!rho) rho = worst;
    }

    const RateBound bound = rho_bound_glm(bounds, problem->dim());
    row("ell", num(bounds.ell));
    row("u", num(bounds.u));
    row("rho_bound", num(bound.value));
    row("rho_bound_vacuous", bound.vacuous ? "true" : "false");
    const double gd = gd_rate_bound(problem->sketch_data_matrix(), bounds);
    row("gd_rate_bound", num(gd));
    const double gap = gd_rate_gap(problem->sketch_data_matrix(), bounds);
    row("gd_rate_gap", num(gap));
    if (rho) {
        row("rho_minus_bound", num(*rho - bound.value));
        row("rho_over_gd_gap", gap > 0.0 ? num(*rho / gap) : "inf");
    }

    const fs::path dir = experiment_dir(opt, cfg);
    std::ofstream csv(dir / "rho.csv");
    write_metadata(csv, cfg.entries());
    csv << "quantity,value\n";
    for (const auto& [k, v] : rows) csv << k << ',' << v << '\n';
    std::ofstream report(dir / "report.txt");
    write_metadata(report, cfg.entries());
    report << '\n';
    for (const auto& [k, v] : rows) report << k << " = " << v << '\n';
    if (!opt.quiet) {
        for (const auto& [k, v] : rows) out << k << " = " << v << '\n';
    }
    if (!rho) {
        err << "error: rho is unavailable for this problem and sketch\n";
        return kExitFailure;
    }
    return kExitOk;
}

// ------------------------------------------------------------ reference

int cmd_reference(const Options& opt, std::ostream& out, std::ostream&) {
    ExperimentConfig cfg = load(opt);
    auto problem = build_problem(cfg);
    const Reference ref = reference_solve(*problem);
    const fs::path dir = experiment_dir(opt, cfg);
    std::ofstream file(dir / "reference.txt");
    write_metadata(file, cfg.entries());
    file << "f_star = " << num(ref.f_star) << '\n' << "grad_norm = " << num(ref.grad_norm) << '\n' << "x_star =";
    for (Eigen::Index i = 0; i < ref.x_star.size(); ++i) file << ' ' << num(ref.x_star(i));
    file << '\n';
    if (!opt.quiet) {
        out << "f_star = " << num(ref.f_star) << '\n' << "grad_norm = " << num(ref.grad_norm) << '\n';
        out << "written: " << (dir / "reference.txt").string() << '\n';
    }
    return kExitOk;
}

// ------------------------------------------------------------- validate

int cmd_validate(const Options& opt, std::ostream& out, std::ostream& err) {
    UpdateFn update = bfgs_update;
    if (opt.fault == "update_sign") {
        update = [](const InverseEstimate& b, const SketchSample& s, const Matrix& y) {
            InverseEstimate good = bfgs_update(b, s, y);
            return InverseEstimate{2.0 * b.b - good.b};
        };
    } else if (!opt.fault.empty()) {
        throw ConfigError("--fault: unknown fault '" + opt.fault + "'");
    }
    const std::vector<CheckGroup> groups = validate_suite(update, opt.seed.value_or(0));
    bool ok = true;
    for (const CheckGroup& g : groups) {
        ok = ok && g.passed;
        if (!opt.quiet || !g.passed) {
            (g.passed ? out : err) << (g.passed ? "PASS " : "FAIL ") << g.name << " (" << short_num(g.seconds)
                                   << " s): " << g.detail << '\n';
        }
    }
    if (!opt.quiet) out << (ok ? "all groups passed\n" : "validation failed\n");
    return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Randomized BFGS experiment harness"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config, "JSON experiment configuration");
        if (needs_config) c->required();
        sub->add_option("--set", opt.sets, "Override a config key (key=value), repeatable");
        sub->add_option("--out", opt.out, "Output root directory")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Override the run seed");
        sub->add_option("--jobs", opt.jobs, "Parallel runs for compare")->capture_default_str();
        sub->add_flag("--quiet", opt.quiet, "Only print errors");
    };
    CLI::App* run = app.add_subcommand("run", "Run one configured solver and write its trace");
    CLI::App* compare = app.add_subcommand("compare", "Run every method x tau cell against a shared reference");
    CLI::App* rho = app.add_subcommand("rho", "Estimate rho at probe points and compare with the bounds");
    CLI::App* reference = app.add_subcommand("reference", "Solve for the reference minimizer");
    CLI::App* validate = app.add_subcommand("validate", "Run the fast invariant suite");
    for (CLI::App* sub : {run, compare, rho, reference}) add_common(sub, true);
    add_common(validate, false);
    validate->add_option("--fault", opt.fault, "Inject a fault (update_sign)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(opt, out, err);
        if (*compare) return cmd_compare(opt, out, err);
        if (*rho) return cmd_rho(opt, out, err);
        if (*reference) return cmd_reference(opt, out, err);
        return cmd_validate(opt, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace rbfgs::cli
