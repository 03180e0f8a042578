#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "rbfgs/problems.hpp"
#include "rbfgs/qn_update.hpp"
#include "rbfgs/sketch.hpp"
#include "rbfgs/solvers.hpp"

namespace {

using namespace rbfgs;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

std::shared_ptr<GlmProblem> logistic(Eigen::Index d, Eigen::Index n) {
    Rng rng(3);
    const Matrix a = gaussian(d, n, rng);
    Vector labels(n);
    for (Eigen::Index i = 0; i < n; ++i) labels(i) = i % 2 ? 1.0 : -1.0;
    return std::make_shared<GlmProblem>(a, labels, GlmLink::logistic, 1e-3);
}

// args: d, tau
void BM_BfgsUpdate(benchmark::State& state) {
    const auto d = state.range(0);
    const auto tau = state.range(1);
    Rng rng(1);
    const Matrix h = hilbert(d) + Matrix::Identity(d, d);
    const Matrix b = Matrix::Identity(d, d);
    const Matrix s = gaussian(d, tau, rng);
    const Matrix y = h * s;
    for (auto _ : state) benchmark::DoNotOptimize(bfgs_update({b}, {s}, y));
}
BENCHMARK(BM_BfgsUpdate)->Args({50, 1})->Args({50, 10})->Args({200, 1})->Args({200, 20})->Args({500, 50});

// args: d, tau
void BM_HessSketchGlm(benchmark::State& state) {
    const auto d = state.range(0);
    const auto problem = logistic(d, 4 * d);
    Rng rng(2);
    const Vector x = 0.1 * gaussian(d, 1, rng).col(0);
    const Matrix s = gaussian(d, state.range(1), rng);
    for (auto _ : state) benchmark::DoNotOptimize(problem->hess_sketch(x, {s}));
}
BENCHMARK(BM_HessSketchGlm)->Args({50, 5})->Args({200, 20})->Args({500, 50});

void BM_ShortRun(benchmark::State& state) {
    const auto problem = logistic(50, 500);
    RunConfig c;
    c.problem = problem;
    c.sketch.kind = SketchKind::coord;
    c.sketch.tau = 5;
    c.step_rule = StepRule::wolfe;
    c.x0 = Vector::Zero(50);
    c.max_iters = 50;
    for (auto _ : state) benchmark::DoNotOptimize(rbfgs_run(c));
}
BENCHMARK(BM_ShortRun)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
