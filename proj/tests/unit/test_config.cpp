#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <Eigen/Eigenvalues>
#include <sstream>

#include "rbfgs/config.hpp"
#include "rbfgs/errors.hpp"

using namespace rbfgs;

namespace {

ExperimentConfig load(const std::string& text, const std::filesystem::path& base = {}) {
    std::istringstream in(text);
    return load_config(in, base);
}

// Message of the ConfigError thrown by f, or "" when nothing was thrown.
template <typename F>
std::string config_error(F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimalHilbert = R"({
  "problem": {"type": "hilbert", "dim": 100},
  "solver": {"method": "rbfgs"},
  "sketch": {"kind": "svd", "tau": 10}
})";

std::string value_of(const Metadata& m, const std::string& key) {
    for (const auto& [k, v] : m)
        if (k == key) return v;
    return "<missing>";
}

}  // namespace

TEST(LoadConfig, MinimalHilbertGetsDefaults) {
    const ExperimentConfig c = load(kMinimalHilbert);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.get("problem.type"), "hilbert");
    EXPECT_EQ(c.get_uint("problem.dim"), 100u);
    EXPECT_EQ(c.get("sketch.kind"), "svd");
    EXPECT_EQ(c.get("sketch.tau"), "10");
    EXPECT_EQ(c.get("solver.step_rule"), "wolfe");
    EXPECT_EQ(c.get("solver.b0"), "identity");
    EXPECT_EQ(c.get("solver.hessian_point"), "pre_step");
    EXPECT_EQ(c.get_number("solver.wolfe_c1"), 1e-4);
    EXPECT_EQ(c.get_number("solver.wolfe_c2"), 0.9);
    EXPECT_EQ(c.get_uint("solver.max_iters"), 1000u);
    EXPECT_EQ(c.entries().size(), ExperimentConfig::keys().size());
    for (std::size_t i = 0; i < c.entries().size(); ++i) EXPECT_EQ(c.entries()[i].first, ExperimentConfig::keys()[i]);
}

TEST(LoadConfig, DottedAndNestedKeysAgree) {
    const ExperimentConfig nested = load(kMinimalHilbert);
    const ExperimentConfig flat =
        load(R"({"problem.type": "hilbert", "problem.dim": 100, "solver.method": "rbfgs",
                 "sketch": {"kind": "svd"}, "sketch.tau": "10"})");
    EXPECT_EQ(nested.entries(), flat.entries());
}

TEST(LoadConfig, RejectsTauZero) {
    const std::string msg = config_error([] { load(R"({"problem": {"type": "hilbert", "dim": 4}, "sketch": {"tau": 0}})"); });
    EXPECT_NE(msg.find("sketch.tau"), std::string::npos) << msg;
}

TEST(LoadConfig, RejectsUnknownKeys) {
    EXPECT_NE(config_error([] { load(R"({"problem": {"type": "hilbert", "dim": 4, "size": 3}})"); }).find("problem.size"),
              std::string::npos);
    EXPECT_NE(config_error([] { load(R"({"optimizer": {}})"); }).find("optimizer"), std::string::npos);
}

TEST(LoadConfig, RejectsBadValues) {
    EXPECT_NE(config_error([] { load(R"({"problem": {"type": "rosenbrock", "dim": 4}})"); }).find("problem.type"),
              std::string::npos);
    EXPECT_NE(config_error([] { load(R"({"problem": {"type": "hilbert", "dim": -4}})"); }).find("problem.dim"),
              std::string::npos);
    EXPECT_NE(config_error([] { load(R"({"problem": {"type": "hilbert", "dim": 4}, "solver": {"grad_tol": "small"}})"); })
                  .find("solver.grad_tol"),
              std::string::npos);
    EXPECT_NE(config_error([] { load(R"({"problem": {"type": "hilbert", "dim": 4}, "sketch": {"kind": "hadamard"}})"); })
                  .find("sketch.kind"),
              std::string::npos);
    EXPECT_FALSE(config_error([] { load("{not json"); }).empty());
    EXPECT_FALSE(config_error([] { load("[1, 2]"); }).empty());
}

TEST(Validate, MissingRequiredKey) {
    EXPECT_NE(config_error([] { load(R"({"problem": {"dim": 4}})"); }).find("problem.type"), std::string::npos);
    const ExperimentConfig fresh;
    EXPECT_NE(config_error([&] { fresh.validate(); }).find("problem.type"), std::string::npos);
}

TEST(Validate, TauAgainstDimension) {
    EXPECT_NE(config_error([] { load(R"({"problem": {"type": "hilbert", "dim": 4}, "sketch": {"tau": 5}})"); })
                  .find("sketch.tau"),
              std::string::npos);
    ExperimentConfig c = load(R"({"problem": {"type": "hilbert", "dim": 4}})");
    c.set("sketch.tau", "5");
    EXPECT_NE(config_error([&] { c.validate(); }).find("sketch.tau"), std::string::npos);
    c.set("sketch.tau", "d");
    EXPECT_NO_THROW(c.validate());
    c.set("sketch.kind", "identity");
    c.set("sketch.tau", "9");
    EXPECT_NO_THROW(c.validate());
    c.set("sketch.kind", "fixed_direction");
    c.set("sketch.tau", "2");
    EXPECT_NE(config_error([&] { c.validate(); }).find("sketch.tau"), std::string::npos);
}

TEST(Validate, WolfeOrderingAndTarget) {
    ExperimentConfig c = load(R"({"problem": {"type": "hilbert", "dim": 4}})");
    c.set("solver.wolfe_c2", "0.00001");
    EXPECT_NE(config_error([&] { c.validate(); }).find("solver.wolfe_c2"), std::string::npos);
    c.set("solver.wolfe_c2", "0.9");
    c.set("compare.target", "1");
    EXPECT_NE(config_error([&] { c.validate(); }).find("compare.target"), std::string::npos);
}

TEST(Validate, CompareMethods) {
    ExperimentConfig c = load(R"({"problem": {"type": "hilbert", "dim": 4}})");
    c.set("compare.methods", "rbfgs:coord:2,bfgs,gd");
    EXPECT_NO_THROW(c.validate());
    c.set("compare.methods", "rbfgs:coord:9");
    EXPECT_NE(config_error([&] { c.validate(); }).find("compare.methods"), std::string::npos);
    c.set("compare.methods", "lbfgs");
    EXPECT_NE(config_error([&] { c.validate(); }).find("compare.methods"), std::string::npos);
}

TEST(Set, CanonicalizesValues) {
    ExperimentConfig c;
    c.set("solver.grad_tol", "1.0e-10");
    EXPECT_EQ(c.get("solver.grad_tol"), "1e-10");
    c.set("problem.normalize", "true");
    EXPECT_TRUE(c.get_bool("problem.normalize"));
    c.set("compare.taus", "1, sqrt_d ,d");
    EXPECT_EQ(c.get_list("compare.taus"), (std::vector<std::string>{"1", "sqrt_d", "d"}));
    EXPECT_THROW(c.set("solver.max_iters", "1.5"), ConfigError);
    EXPECT_THROW(c.set("problem.normalize", "maybe"), ConfigError);
    EXPECT_THROW(c.set("nope", "1"), ConfigError);
    EXPECT_FALSE(ExperimentConfig::is_known("nope"));
    EXPECT_TRUE(ExperimentConfig::is_known("rho.mc_samples"));
}

TEST(ApplyOverride, SetsAndRejects) {
    ExperimentConfig c = load(kMinimalHilbert);
    apply_override(c, "sketch.tau=3");
    EXPECT_EQ(c.get("sketch.tau"), "3");
    apply_override(c, "seed=42");
    EXPECT_EQ(c.get_uint("seed"), 42u);
    EXPECT_NE(config_error([&] { apply_override(c, "sketch.tau"); }).find("sketch.tau"), std::string::npos);
    EXPECT_NE(config_error([&] { apply_override(c, "sketch.taus=3"); }).find("sketch.taus"), std::string::npos);
}

TEST(ResolveTau, Forms) {
    EXPECT_EQ(resolve_tau("7", 100), 7u);
    EXPECT_EQ(resolve_tau("d", 100), 100u);
    EXPECT_EQ(resolve_tau("sqrt_d", 100), 10u);
    EXPECT_EQ(resolve_tau("sqrt_d", 50), 7u);
    EXPECT_EQ(resolve_tau("sqrt_d", 1), 1u);
    EXPECT_THROW(resolve_tau("0", 4), ConfigError);
    EXPECT_THROW(resolve_tau("half", 4), ConfigError);
}

TEST(BuildProblem, AutoRegularization) {
    ExperimentConfig c = load(R"({"problem": {"type": "logistic", "dim": 6, "samples": 80, "data_seed": 3}})");
    const auto p = build_problem(c);
    const auto* glm = dynamic_cast<const GlmProblem*>(p.get());
    ASSERT_NE(glm, nullptr);
    const Matrix& a = glm->data();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a * a.transpose() / (4.0 * 80.0));
    const double l = eig.eigenvalues().maxCoeff();
    EXPECT_NEAR(glm->reg(), 1e-3 * l, 1e-5 * 1e-3 * l);
    EXPECT_EQ(c.get_number("problem.reg_coef"), glm->reg());
    EXPECT_EQ(c.get("solver.x0"), "zeros");
    EXPECT_EQ(glm->samples(), 80u);
}

TEST(BuildProblem, DeterministicFromDataSeed) {
    ExperimentConfig a = load(R"({"problem": {"type": "square", "dim": 4, "data_seed": 5}})");
    ExperimentConfig b = a;
    const auto pa = build_problem(a);
    const auto pb = build_problem(b);
    EXPECT_EQ(pa->sketch_data_matrix(), pb->sketch_data_matrix());
    EXPECT_EQ(a.get_uint("problem.samples"), 80u);
}

TEST(BuildProblem, BarrierOriginFeasible) {
    ExperimentConfig c = load(R"({"problem": {"type": "barrier", "dim": 5}})");
    const auto p = build_problem(c);
    EXPECT_EQ(p->family(), "barrier");
    EXPECT_TRUE(p->in_domain(Vector::Zero(5)));
    EXPECT_EQ(c.get_uint("problem.samples"), 10u);
}

TEST(BuildProblem, ReadsLibsvmRelativeToBaseDir) {
    const auto dir = std::filesystem::temp_directory_path() / "rbfgs_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "tiny.libsvm");
        f << "1 1:0.5 2:1\n0 2:-1 3:2\n1 1:1 3:1\n0 1:-2\n";
    }
    ExperimentConfig c = load(R"({"problem": {"type": "logistic", "data": "tiny.libsvm", "reg_coef": 0.01}})", dir);
    const auto p = build_problem(c);
    EXPECT_EQ(p->dim(), 3u);
    EXPECT_EQ(c.get_uint("problem.dim"), 3u);
    EXPECT_EQ(c.get_uint("problem.samples"), 4u);
    ExperimentConfig missing = load(R"({"problem": {"type": "logistic", "data": "absent.libsvm"}})", dir);
    EXPECT_NE(config_error([&] { build_problem(missing); }).find("absent.libsvm"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(BuildRun, MetadataMatchesResolvedEntries) {
    ExperimentConfig c = load(R"({"problem": {"type": "logistic", "dim": 9, "data_seed": 1},
                                  "sketch": {"kind": "coord", "tau": "sqrt_d"},
                                  "solver": {"max_iters": 20}, "seed": 4})");
    const auto p = build_problem(c);
    const RunConfig run = build_run(c, p);
    EXPECT_EQ(run.sketch.tau, 3u);
    EXPECT_EQ(value_of(run.metadata, "sketch.tau"), "3");
    EXPECT_EQ(run.seed, 4u);
    EXPECT_EQ(run.max_iters, 20u);
    EXPECT_EQ(run.x0, Vector::Zero(9));
    const Trace t = run_solver(run);
    ExperimentConfig resolved = c;
    resolved.set("sketch.tau", "3");
    EXPECT_EQ(t.metadata, resolved.entries());
}

TEST(BuildRun, SvdDirectionsAndFixedDirection) {
    ExperimentConfig c = load(R"({"problem": {"type": "square", "dim": 5, "data_seed": 2},
                                  "sketch": {"kind": "svd", "tau": 1}})");
    const auto p = build_problem(c);
    const RunConfig svd = build_run(c, p);
    ASSERT_TRUE(svd.sketch.directions.has_value());
    EXPECT_EQ(svd.sketch.directions->cols(), 5);
    c.set("sketch.kind", "fixed_direction");
    const RunConfig fixed = build_run(c, p);
    ASSERT_TRUE(fixed.sketch.probabilities.has_value());
    EXPECT_NEAR(fixed.sketch.probabilities->sum(), 1.0, 1e-12);
    c.set("sketch.kind", "svd");
    c.set("sketch.tau", "6");
    EXPECT_THROW(build_run(c, p), ConfigError);
}

TEST(CompareCells, CrossProductAndPerMethodTau) {
    ExperimentConfig c = load(R"({"problem": {"type": "hilbert", "dim": 16},
                                  "compare": {"methods": ["rbfgs:gauss", "rbfgs:coord:2", "bfgs"],
                                              "taus": [1, "sqrt_d", "d"]}})");
    const std::vector<CompareCell> cells = compare_cells(c, 16);
    ASSERT_EQ(cells.size(), 5u);
    EXPECT_EQ(cells[0].tau, 1u);
    EXPECT_EQ(cells[1].tau, 4u);
    EXPECT_EQ(cells[2].tau, 16u);
    EXPECT_EQ(cells[3].sketch, SketchKind::coord);
    EXPECT_EQ(cells[3].tau, 2u);
    EXPECT_EQ(cells[4].solver, SolverKind::bfgs);
    const ExperimentConfig cell = with_cell(c, cells[3]);
    EXPECT_EQ(cell.get("sketch.kind"), "coord");
    EXPECT_EQ(cell.get("sketch.tau"), "2");
    EXPECT_EQ(cell.get("solver.method"), "rbfgs");
}

TEST(CompareCells, SingleCellFallback) {
    const ExperimentConfig c = load(kMinimalHilbert);
    const std::vector<CompareCell> cells = compare_cells(c, 100);
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].solver, SolverKind::rbfgs);
    EXPECT_EQ(cells[0].sketch, SketchKind::svd);
    EXPECT_EQ(cells[0].tau, 10u);
}

TEST(LoadConfigFile, ShippedConfigsAreValid) {
    for (const char* name : {"hilbert100.json", "logistic_synthetic.json", "hilbert8_rho.json"}) {
        const auto path = std::filesystem::path(RBFGS_CONFIG_DIR) / name;
        EXPECT_NO_THROW(load_config_file(path).validate()) << name;
    }
    EXPECT_THROW(load_config_file("/nonexistent.json"), ConfigError);
}
