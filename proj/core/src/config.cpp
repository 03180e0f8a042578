#include "rbfgs/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <random>

#include "rbfgs/data_io.hpp"
#include "rbfgs/errors.hpp"
#include "rbfgs/matcore.hpp"

namespace rbfgs {
namespace {

using json = nlohmann::json;

enum class Kind { text, choice, uint, number, boolean, number_or_auto, tau, text_list, tau_list };

struct KeySpec {
    std::string_view key;
    Kind kind;
    std::string_view fallback;  // default; empty with `required` means no default
    bool required = false;
    std::vector<std::string_view> choices = {};
};

const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> specs = {
        {"name", Kind::text, "experiment"},
        {"seed", Kind::uint, "0"},
        {"problem.type", Kind::choice, "", true, {"hilbert", "logistic", "square", "barrier"}},
        {"problem.dim", Kind::uint, "0"},
        {"problem.samples", Kind::uint, "0"},
        {"problem.data", Kind::text, ""},
        {"problem.normalize", Kind::boolean, "false"},
        {"problem.reg_coef", Kind::number_or_auto, "auto"},
        {"problem.barrier_weight", Kind::number, "1"},
        {"problem.data_seed", Kind::uint, "0"},
        {"sketch.kind", Kind::choice, "gauss", false,
         {"gauss", "coord", "svd", "svd_no_sigma", "fixed_direction", "identity"}},
        {"sketch.tau", Kind::tau, "1"},
        {"sketch.svd_tol", Kind::number, "1e-08"},
        {"solver.method", Kind::choice, "rbfgs", false, {"rbfgs", "bfgs", "gd", "nesterov", "newton"}},
        {"solver.step_rule", Kind::choice, "wolfe", false, {"unit_monotonic", "unit_plain", "wolfe"}},
        {"solver.b0", Kind::choice, "identity", false, {"identity", "scaled_identity", "true_inverse_at_x0"}},
        {"solver.hessian_point", Kind::choice, "pre_step", false, {"pre_step", "post_step"}},
        {"solver.max_iters", Kind::uint, "1000"},
        {"solver.grad_tol", Kind::number, "1e-10"},
        {"solver.gap_floor", Kind::number, "1e-12"},
        {"solver.wolfe_c1", Kind::number, "0.0001"},
        {"solver.wolfe_c2", Kind::number, "0.9"},
        {"solver.wolfe_max_evals", Kind::uint, "50"},
        {"solver.trace_every", Kind::uint, "1"},
        {"solver.x0", Kind::choice, "auto", false, {"auto", "ones", "zeros", "random"}},
        {"compare.methods", Kind::text_list, ""},
        {"compare.taus", Kind::tau_list, ""},
        {"compare.target", Kind::number, "1e-08"},
        {"rho.probes", Kind::uint, "10"},
        {"rho.mc_samples", Kind::uint, "10000"},
        {"rho.probe_scale", Kind::number, "1"},
    };
    return specs;
}

const KeySpec* find_spec(std::string_view key) {
    for (const KeySpec& s : schema()) {
        if (s.key == key) return &s;
    }
    return nullptr;
}

std::string render(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::optional<double> to_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        std::string item(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        out.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void bad(std::string_view key, const std::string& why) {
    throw ConfigError(std::string(key) + ": " + why);
}

std::string canonical_tau(std::string_view key, std::string_view value) {
    if (value == "sqrt_d" || value == "d") return std::string(value);
    const auto v = to_uint(value);
    if (!v) bad(key, "expected a positive integer, \"sqrt_d\" or \"d\", got '" + std::string(value) + "'");
    if (*v == 0) bad(key, "sketch size must be at least 1");
    return std::to_string(*v);
}

// Canonical string for a textual value of the key's kind.
std::string canonical(const KeySpec& spec, std::string_view value) {
    switch (spec.kind) {
        case Kind::text:
            return std::string(value);
        case Kind::choice:
            if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
                std::string names;
                for (auto c : spec.choices) names += (names.empty() ? "" : ", ") + std::string(c);
                bad(spec.key, "unknown value '" + std::string(value) + "' (expected one of " + names + ")");
            }
            return std::string(value);
        case Kind::uint: {
            const auto v = to_uint(value);
            if (!v) bad(spec.key, "expected a nonnegative integer, got '" + std::string(value) + "'");
            return std::to_string(*v);
        }
        case Kind::number: {
            const auto v = to_number(value);
            if (!v) bad(spec.key, "expected a finite number, got '" + std::string(value) + "'");
            return render(*v);
        }
        case Kind::boolean:
            if (value == "true" || value == "false") return std::string(value);
            bad(spec.key, "expected true or false, got '" + std::string(value) + "'");
        case Kind::number_or_auto: {
            if (value == "auto") return "auto";
            const auto v = to_number(value);
            if (!v) bad(spec.key, "expected a number or \"auto\", got '" + std::string(value) + "'");
            return render(*v);
        }
        case Kind::tau:
            return canonical_tau(spec.key, value);
        case Kind::text_list: {
            std::string out;
            for (const std::string& item : split_list(value)) {
                if (item.empty()) bad(spec.key, "empty list item");
                out += (out.empty() ? "" : ",") + item;
            }
            return out;
        }
        case Kind::tau_list: {
            std::string out;
            for (const std::string& item : split_list(value)) out += (out.empty() ? "" : ",") + canonical_tau(spec.key, item);
            return out;
        }
    }
    bad(spec.key, "unsupported kind");
}

std::string json_scalar(const KeySpec& spec, const json& v) {
    if (v.is_string()) {
        if (spec.kind == Kind::text || spec.kind == Kind::choice || spec.kind == Kind::number_or_auto ||
            spec.kind == Kind::tau) {
            return v.get<std::string>();
        }
        bad(spec.key, "expected a " + std::string(spec.kind == Kind::boolean ? "boolean" : "number") + ", got a string");
    }
    if (v.is_boolean()) {
        if (spec.kind != Kind::boolean) bad(spec.key, "unexpected boolean");
        return v.get<bool>() ? "true" : "false";
    }
    if (v.is_number_integer()) {
        if (spec.kind == Kind::uint || spec.kind == Kind::tau) {
            if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
            bad(spec.key, "expected a nonnegative integer");
        }
        if (spec.kind == Kind::number || spec.kind == Kind::number_or_auto) return render(v.get<double>());
        bad(spec.key, "unexpected number");
    }
    if (v.is_number()) {
        if (spec.kind == Kind::number || spec.kind == Kind::number_or_auto) return render(v.get<double>());
        bad(spec.key, spec.kind == Kind::uint || spec.kind == Kind::tau ? "expected an integer" : "unexpected number");
    }
    bad(spec.key, "unsupported value " + v.dump());
}

void flatten(const json& node, const std::string& prefix, ExperimentConfig& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        const KeySpec* spec = find_spec(key);
        if (it->is_object() && !spec) {
            const bool section = std::ranges::any_of(ExperimentConfig::keys(),
                                                     [&](const std::string& k) { return k.starts_with(key + "."); });
            if (!section) bad(key, "unknown section");
            flatten(*it, key, out);
            continue;
        }
        if (!spec) bad(key, "unknown key");
        if (it->is_null()) bad(key, "null value");
        std::string text;
        if (spec->kind == Kind::text_list || spec->kind == Kind::tau_list) {
            if (!it->is_array()) bad(key, "expected a list");
            const KeySpec item{spec->key, spec->kind == Kind::tau_list ? Kind::tau : Kind::text, ""};
            for (const json& e : *it) {
                const std::string s = json_scalar(item, e);
                if (s.find(',') != std::string::npos) bad(key, "list items may not contain ','");
                text += (text.empty() ? "" : ",") + s;
            }
        } else {
            if (it->is_array() || it->is_object()) bad(key, "expected a scalar");
            text = json_scalar(*spec, *it);
        }
        out.set(key, text);
    }
}

template <typename F>
auto rethrow_as(std::string_view key, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        bad(key, e.what());
    }
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    }
    return m;
}

// "<solver>", "rbfgs:<sketch>" or "rbfgs:<sketch>:<tau>".
struct MethodEntry {
    SolverKind solver = SolverKind::rbfgs;
    std::optional<SketchKind> sketch;
    std::optional<std::string> tau;
};

MethodEntry parse_method(const std::string& m) {
    constexpr std::string_view key = "compare.methods";
    const std::vector<std::string> parts = [&] {
        std::vector<std::string> out;
        std::size_t start = 0;
        for (std::size_t colon = m.find(':'); colon != std::string::npos; colon = m.find(':', start)) {
            out.push_back(m.substr(start, colon - start));
            start = colon + 1;
        }
        out.push_back(m.substr(start));
        return out;
    }();
    if (parts.size() > 3) bad(key, "malformed method '" + m + "'");
    MethodEntry e;
    e.solver = rethrow_as(key, [&] { return parse_solver_kind(parts[0]); });
    if (parts.size() > 1 && e.solver != SolverKind::rbfgs) bad(key, "only rbfgs takes a sketch: '" + m + "'");
    if (parts.size() > 1) e.sketch = rethrow_as(key, [&] { return parse_sketch_kind(parts[1]); });
    if (parts.size() > 2) e.tau = canonical_tau(key, parts[2]);
    return e;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    for (const KeySpec& s : schema()) entries_.emplace_back(std::string(s.key), std::string(s.fallback));
}

const std::vector<std::string>& ExperimentConfig::keys() {
    static const std::vector<std::string> out = [] {
        std::vector<std::string> k;
        for (const KeySpec& s : schema()) k.emplace_back(s.key);
        return k;
    }();
    return out;
}

bool ExperimentConfig::is_known(std::string_view key) { return find_spec(key) != nullptr; }

const std::string& ExperimentConfig::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    bad(key, "unknown key");
}

double ExperimentConfig::get_number(std::string_view key) const {
    const auto v = to_number(get(key));
    if (!v) bad(key, "not a number");
    return *v;
}

std::uint64_t ExperimentConfig::get_uint(std::string_view key) const {
    const auto v = to_uint(get(key));
    if (!v) bad(key, "not an integer");
    return *v;
}

bool ExperimentConfig::get_bool(std::string_view key) const { return get(key) == "true"; }

std::vector<std::string> ExperimentConfig::get_list(std::string_view key) const { return split_list(get(key)); }

void ExperimentConfig::set(std::string_view key, std::string_view value) {
    const KeySpec* spec = find_spec(key);
    if (!spec) bad(key, "unknown key");
    const std::string text = canonical(*spec, value);
    for (auto& [k, v] : entries_) {
        if (k == key) v = text;
    }
}

void ExperimentConfig::validate() const {
    for (const KeySpec& s : schema()) {
        if (s.required && get(s.key).empty()) bad(s.key, "missing required key");
    }
    const std::string type = get("problem.type");
    const bool glm = type == "logistic" || type == "square";
    const std::uint64_t dim = get_uint("problem.dim");
    if (!get("problem.data").empty() && !glm) bad("problem.data", "data files apply to logistic and square only");
    if (dim == 0 && (!glm || get("problem.data").empty())) bad("problem.dim", "must be positive");

    const std::string& reg = get("problem.reg_coef");
    if (reg != "auto" && get_number("problem.reg_coef") < 0.0) bad("problem.reg_coef", "must be nonnegative");
    if (!(get_number("problem.barrier_weight") > 0.0)) bad("problem.barrier_weight", "must be positive");
    if (!(get_number("sketch.svd_tol") > 0.0)) bad("sketch.svd_tol", "must be positive");
    if (get_uint("solver.max_iters") < 1) bad("solver.max_iters", "must be at least 1");
    if (get_uint("solver.trace_every") < 1) bad("solver.trace_every", "must be at least 1");
    if (get_uint("solver.wolfe_max_evals") < 1) bad("solver.wolfe_max_evals", "must be at least 1");
    if (!(get_number("solver.grad_tol") > 0.0)) bad("solver.grad_tol", "must be positive");
    if (!(get_number("solver.gap_floor") > 0.0)) bad("solver.gap_floor", "must be positive");
    const double c1 = get_number("solver.wolfe_c1");
    const double c2 = get_number("solver.wolfe_c2");
    if (!(c1 > 0.0 && c1 < 1.0)) bad("solver.wolfe_c1", "must lie in (0, 1)");
    if (!(c2 > c1 && c2 < 1.0)) bad("solver.wolfe_c2", "must lie in (wolfe_c1, 1)");
    const double target = get_number("compare.target");
    if (!(target > 0.0 && target < 1.0)) bad("compare.target", "must lie in (0, 1)");
    if (get_uint("rho.probes") < 1) bad("rho.probes", "must be at least 1");
    if (get_uint("rho.mc_samples") < 2) bad("rho.mc_samples", "must be at least 2");
    if (!(get_number("rho.probe_scale") >= 0.0)) bad("rho.probe_scale", "must be nonnegative");

    if (dim > 0) {
        if (get("sketch.kind") != "identity" && resolve_tau(get("sketch.tau"), dim) > dim) {
            bad("sketch.tau", "exceeds problem.dim");
        }
        for (const std::string& t : get_list("compare.taus")) {
            if (resolve_tau(t, dim) > dim) bad("compare.taus", "entry '" + t + "' exceeds problem.dim");
        }
        if (get("sketch.kind") == "fixed_direction" && resolve_tau(get("sketch.tau"), dim) != 1) {
            bad("sketch.tau", "fixed_direction sketches have tau = 1");
        }
    }
    for (const std::string& m : get_list("compare.methods")) {
        const MethodEntry e = parse_method(m);
        if (e.tau && dim > 0 && resolve_tau(*e.tau, dim) > dim) bad("compare.methods", "'" + m + "' exceeds problem.dim");
    }
}

ExperimentConfig load_config(std::istream& in, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    ExperimentConfig config;
    config.base_dir = base_dir;
    flatten(doc, "", config);
    config.validate();
    return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    return load_config(in, path.parent_path());
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    config.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::size_t resolve_tau(std::string_view value, std::size_t d) {
    if (value == "d") return d;
    if (value == "sqrt_d") {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d)))));
    }
    const auto v = to_uint(value);
    if (!v || *v == 0) throw ConfigError("sketch.tau: invalid value '" + std::string(value) + "'");
    return static_cast<std::size_t>(*v);
}

std::shared_ptr<const Problem> build_problem(ExperimentConfig& config) {
    config.validate();
    const std::string type = config.get("problem.type");
    Rng rng(config.get_uint("problem.data_seed"));
    std::size_t d = config.get_uint("problem.dim");
    std::shared_ptr<const Problem> problem;

    if (type == "hilbert") {
        problem = std::make_shared<QuadraticProblem>(hilbert(d));
    } else if (type == "barrier") {
        const std::size_t extra = config.get_uint("problem.samples") ? config.get_uint("problem.samples") : 2 * d;
        const auto di = static_cast<Eigen::Index>(d);
        const auto ei = static_cast<Eigen::Index>(extra);
        Matrix a(ei + 2 * di, di);
        a.topRows(ei) = gaussian_matrix(ei, di, rng);
        a.middleRows(ei, di) = Matrix::Identity(di, di);
        a.bottomRows(di) = -Matrix::Identity(di, di);
        Vector b = Vector::Ones(ei + 2 * di);
        b.head(ei) += gaussian_matrix(ei, 1, rng).col(0).cwiseAbs();
        const Vector c = gaussian_matrix(di, 1, rng).col(0);
        config.set("problem.samples", std::to_string(extra));
        problem = std::make_shared<LogBarrierProblem>(std::move(a), std::move(b), c,
                                                      config.get_number("problem.barrier_weight"));
    } else {
        const GlmLink link = type == "logistic" ? GlmLink::logistic : GlmLink::square;
        Matrix a;
        Vector labels;
        if (!config.get("problem.data").empty()) {
            std::filesystem::path path = config.get("problem.data");
            if (path.is_relative()) path = config.base_dir / path;
            const LibsvmDataset ds =
                rethrow_as("problem.data", [&] {
                    try {
                        return read_libsvm_file(path, d ? std::optional<std::size_t>(d) : std::nullopt);
                    } catch (const ConfigError&) {
                        throw;
                    } catch (const Error& e) {
                        throw ConfigError(path.string() + ": " + e.what());
                    }
                });
            if (d && ds.d > d) bad("problem.dim", "data has " + std::to_string(ds.d) + " features");
            const std::uint64_t n = config.get_uint("problem.samples");
            if (n && n != ds.n) bad("problem.samples", "data has " + std::to_string(ds.n) + " samples");
            if (ds.n == 0) bad("problem.data", "no samples");
            d = ds.d;
            a = ds.dense();
            labels = ds.label_vector();
            config.set("problem.dim", std::to_string(ds.d));
            config.set("problem.samples", std::to_string(ds.n));
        } else {
            const std::size_t n = config.get_uint("problem.samples") ? config.get_uint("problem.samples") : 20 * d;
            a = gaussian_matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n), rng);
            const Vector truth = gaussian_matrix(static_cast<Eigen::Index>(d), 1, rng).col(0) /
                                 std::sqrt(static_cast<double>(d));
            const Vector noise = gaussian_matrix(static_cast<Eigen::Index>(n), 1, rng).col(0);
            const Vector t = a.transpose() * truth;
            labels.resize(t.size());
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                labels(i) = link == GlmLink::logistic ? (t(i) + 0.5 * noise(i) >= 0.0 ? 1.0 : -1.0)
                                                      : t(i) + 0.1 * noise(i);
            }
            config.set("problem.samples", std::to_string(n));
        }
        if (config.get_bool("problem.normalize")) scale_features(a);
        double reg = 0.0;
        if (config.get("problem.reg_coef") == "auto") {
            const double u = link == GlmLink::logistic ? 0.25 : 1.0;
            const double scale = u / static_cast<double>(a.cols());
            const double l = power_iteration([&](const Vector& v) -> Vector { return scale * (a * (a.transpose() * v)); },
                                             static_cast<std::size_t>(a.rows()));
            reg = 1e-3 * l;
            config.set("problem.reg_coef", render(reg));
        } else {
            reg = config.get_number("problem.reg_coef");
        }
        problem = std::make_shared<GlmProblem>(std::move(a), std::move(labels), link, reg);
    }

    if (config.get("solver.x0") == "auto") config.set("solver.x0", type == "hilbert" ? "ones" : "zeros");
    config.validate();
    return problem;
}

RunConfig build_run(ExperimentConfig config, std::shared_ptr<const Problem> problem) {
    if (!problem) throw ConfigError("build_run: no problem");
    const std::size_t d = problem->dim();
    if (config.get_uint("problem.dim") != d) bad("problem.dim", "does not match the built problem");
    if (config.get("solver.x0") == "auto") config.set("solver.x0", config.get("problem.type") == "hilbert" ? "ones" : "zeros");
    const std::size_t tau = resolve_tau(config.get("sketch.tau"), d);
    config.set("sketch.tau", std::to_string(tau));
    config.validate();

    RunConfig run;
    run.problem = problem;
    run.solver = parse_solver_kind(config.get("solver.method"));
    run.step_rule = parse_step_rule(config.get("solver.step_rule"));
    run.b0 = parse_initial_estimate(config.get("solver.b0"));
    run.hessian_point = parse_hessian_point(config.get("solver.hessian_point"));
    run.max_iters = config.get_uint("solver.max_iters");
    run.grad_tol = config.get_number("solver.grad_tol");
    run.gap_floor = config.get_number("solver.gap_floor");
    run.trace_every = config.get_uint("solver.trace_every");
    run.seed = config.get_uint("seed");
    run.wolfe.c1 = config.get_number("solver.wolfe_c1");
    run.wolfe.c2 = config.get_number("solver.wolfe_c2");
    run.wolfe.max_evals = static_cast<int>(config.get_uint("solver.wolfe_max_evals"));

    const std::string x0 = config.get("solver.x0");
    const auto di = static_cast<Eigen::Index>(d);
    if (x0 == "ones") {
        run.x0 = Vector::Ones(di);
    } else if (x0 == "zeros") {
        run.x0 = Vector::Zero(di);
    } else {
        Rng rng(config.get_uint("problem.data_seed") ^ 0x9e3779b97f4a7c15ULL);
        run.x0 = gaussian_matrix(di, 1, rng).col(0) * (0.1 / std::sqrt(static_cast<double>(d)));
    }
    if (!problem->in_domain(run.x0)) bad("solver.x0", "starting point is outside the problem domain");

    run.sketch.kind = parse_sketch_kind(config.get("sketch.kind"));
    run.sketch.tau = tau;
    if (run.solver == SolverKind::rbfgs) {
        const double tol = config.get_number("sketch.svd_tol");
        switch (run.sketch.kind) {
            case SketchKind::svd:
            case SketchKind::svd_no_sigma:
                run.sketch.directions =
                    build_svd_directions(problem->sketch_data_matrix(), tol, run.sketch.kind == SketchKind::svd);
                if (tau > static_cast<std::size_t>(run.sketch.directions->cols())) {
                    bad("sketch.tau", "exceeds the numerical rank " + std::to_string(run.sketch.directions->cols()));
                }
                break;
            case SketchKind::fixed_direction: {
                const Matrix dirs = build_svd_directions(problem->sketch_data_matrix(), tol, false);
                const auto* glm = dynamic_cast<const GlmProblem*>(problem.get());
                const Matrix upper = glm ? glm->hessian_upper_bound() : problem->full_hessian(run.x0);
                run.sketch = make_fixed_direction_spec(dirs, upper);
                break;
            }
            default:
                break;
        }
        rethrow_as("sketch.kind", [&] {
            try {
                run.sketch.validate(d);
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
            return 0;
        });
    }
    run.metadata = config.entries();
    rethrow_as("solver", [&] {
        run.validate();
        return 0;
    });
    return run;
}

void attach_reference(RunConfig& run, const Reference& ref) {
    run.f_star = ref.f_star;
    try {
        run.h_star = SpdMatrix(ref.h_star);
    } catch (const Error&) {
        run.h_star.reset();
    }
}

std::vector<CompareCell> compare_cells(const ExperimentConfig& config, std::size_t d) {
    std::vector<std::string> methods = config.get_list("compare.methods");
    if (methods.empty()) {
        methods.push_back(config.get("solver.method") == "rbfgs" ? "rbfgs:" + config.get("sketch.kind")
                                                                 : config.get("solver.method"));
    }
    std::vector<std::string> taus = config.get_list("compare.taus");
    if (taus.empty()) taus.push_back(config.get("sketch.tau"));
    const SketchKind default_kind = parse_sketch_kind(config.get("sketch.kind"));
    const std::size_t default_tau = resolve_tau(config.get("sketch.tau"), d);

    std::vector<CompareCell> cells;
    for (const std::string& m : methods) {
        const MethodEntry e = parse_method(m);
        CompareCell cell;
        cell.solver = e.solver;
        cell.sketch = e.sketch.value_or(default_kind);
        if (cell.solver != SolverKind::rbfgs || e.tau) {
            cell.tau = e.tau ? resolve_tau(*e.tau, d) : default_tau;
            cells.push_back(cell);
            continue;
        }
        for (const std::string& t : taus) {
            cell.tau = resolve_tau(t, d);
            cells.push_back(cell);
        }
    }
    return cells;
}

ExperimentConfig with_cell(const ExperimentConfig& config, const CompareCell& cell) {
    ExperimentConfig out = config;
    out.set("solver.method", to_string(cell.solver));
    out.set("sketch.kind", to_string(cell.sketch));
    out.set("sketch.tau", std::to_string(cell.tau));
    return out;
}

}  // namespace rbfgs
