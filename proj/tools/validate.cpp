#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "cli.hpp"
#include "rbfgs/diagnostics.hpp"
#include "rbfgs/errors.hpp"
#include "rbfgs/problems.hpp"
#include "rbfgs/solvers.hpp"

namespace rbfgs::cli {
namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    }
    return m;
}

Matrix random_spd(Eigen::Index d, Rng& rng) {
    const Matrix m = gaussian(d, d, rng);
    Matrix h = m * m.transpose() / static_cast<double>(d);
    h.diagonal().array() += 0.5;
    return 0.5 * (h + h.transpose());
}

std::string fmt(const char* pattern, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

template <typename Body>
CheckGroup timed(std::string name, Body&& body) {
    CheckGroup g;
    g.name = std::move(name);
    const auto start = std::chrono::steady_clock::now();
    try {
        body(g);
    } catch (const std::exception& e) {
        g.passed = false;
        g.detail = std::string("exception: ") + e.what();
    }
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return g;
}

double central_difference_error(const Problem& p, const Vector& x) {
    const Vector g = p.gradient(x);
    Vector fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        Vector xp = x;
        Vector xm = x;
        xp(i) += h;
        xm(i) -= h;
        fd(i) = (p.value(xp) - p.value(xm)) / (2.0 * h);
    }
    return (fd - g).norm() / std::max(1.0, g.norm());
}

}  // namespace

std::vector<CheckGroup> validate_suite(const UpdateFn& update, std::uint64_t seed) {
    std::vector<CheckGroup> groups;
    Rng rng(seed);
    const Eigen::Index d = 12;

    groups.push_back(timed("secant_identity", [&](CheckGroup& g) {
        double worst = 0.0;
        for (int trial = 0; trial < 120; ++trial) {
            const Matrix h = random_spd(d, rng);
            const Matrix m = gaussian(d, d, rng);
            const InverseEstimate b{0.5 * (m + m.transpose())};
            const Eigen::Index tau = std::array<Eigen::Index, 3>{1, 4, 8}[trial % 3];
            const SketchSample s{gaussian(d, tau, rng)};
            const Matrix y = h * s.s;
            const Matrix next = update(b, s, y).b;
            worst = std::max(worst, (next * y - s.s).norm() / s.s.norm());
        }
        g.passed = worst <= 1e-9;
        g.detail = fmt("max ||B+ H S - S|| / ||S|| = %.3g over 120 trials", worst);
    }));

    groups.push_back(timed("fixed_point", [&](CheckGroup& g) {
        double worst = 0.0;
        for (int trial = 0; trial < 40; ++trial) {
            const SpdMatrix h(random_spd(d, rng));
            const Matrix hinv = spd_inverse(h);
            const SketchSample s{gaussian(d, 1 + trial % 5, rng)};
            const Matrix next = update(InverseEstimate{hinv}, s, h.matrix() * s.s).b;
            worst = std::max(worst, (next - hinv).norm() / hinv.norm());
        }
        // Identity sketches collapse the estimate to the inverse Hessian.
        Rng data_rng(seed + 1);
        const Matrix a = gaussian(6, 60, data_rng);
        Vector labels(60);
        for (Eigen::Index i = 0; i < 60; ++i) labels(i) = a.col(i).sum() > 0.0 ? 1.0 : -1.0;
        auto problem = std::make_shared<GlmProblem>(a, labels, GlmLink::logistic, 1e-2);
        RunConfig cfg;
        cfg.problem = problem;
        cfg.sketch.kind = SketchKind::identity;
        cfg.x0 = Vector::Constant(6, 0.3);
        cfg.max_iters = 8;
        cfg.grad_tol = 1e-14;
        double collapse = 0.0;
        rbfgs_run(cfg, [&](const IterationEvent& e) {
            const Matrix target = spd_inverse(SpdMatrix(problem->full_hessian(e.x_prev)));
            collapse = std::max(collapse, (*e.b_next - target).norm() / target.norm());
        });
        g.passed = worst <= 1e-9 && collapse <= 1e-8;
        g.detail = fmt("fixed point %.3g, ", worst) + fmt("identity-sketch collapse %.3g", collapse);
    }));

    groups.push_back(timed("symmetry_psd", [&](CheckGroup& g) {
        double asym = 0.0;
        double min_eig = 1.0;
        for (int trial = 0; trial < 40; ++trial) {
            const Matrix h = random_spd(d, rng);
            const Matrix m = gaussian(d, d, rng);
            const InverseEstimate b{m * m.transpose() / static_cast<double>(d)};
            const SketchSample s{gaussian(d, 1 + trial % 6, rng)};
            const Matrix next = update(b, s, h * s.s).b;
            asym = std::max(asym, asymmetry(next));
            min_eig = std::min(min_eig, sym_eig_min(0.5 * (next + next.transpose())) / next.norm());
        }
        g.passed = asym <= 1e-12 && min_eig >= -1e-10;
        g.detail = fmt("max asymmetry %.3g, ", asym) + fmt("min relative eigenvalue %.3g", min_eig);
    }));

    groups.push_back(timed("finite_differences", [&](CheckGroup& g) {
        Rng data_rng(seed + 2);
        const Eigen::Index n = 40;
        const Matrix a = gaussian(6, n, data_rng);
        Vector labels(n);
        for (Eigen::Index i = 0; i < n; ++i) labels(i) = i % 2 ? 1.0 : -1.0;
        const GlmProblem logistic(a, labels, GlmLink::logistic, 1e-2);
        const QuadraticProblem quad(hilbert(6) + Matrix::Identity(6, 6));
        Matrix ab(n + 12, 6);
        ab << gaussian(n, 6, data_rng), Matrix::Identity(6, 6), -Matrix::Identity(6, 6);
        const LogBarrierProblem barrier(ab, Vector::Constant(n + 12, 3.0), gaussian(6, 1, data_rng).col(0),
                                        1.0);
        const Problem* problems[] = {&logistic, &quad, &barrier};
        double grad_err = 0.0;
        double sketch_err = 0.0;
        for (const Problem* p : problems) {
            for (int probe = 0; probe < 5; ++probe) {
                const Vector x = 0.1 * gaussian(6, 1, rng).col(0);
                if (!p->in_domain(x)) continue;
                grad_err = std::max(grad_err, central_difference_error(*p, x));
                const SketchSample s{Matrix::Identity(6, 6)};
                const Matrix full = p->full_hessian(x);
                sketch_err = std::max(sketch_err, (p->hess_sketch(x, s) - full).norm() / std::max(1.0, full.norm()));
            }
        }
        g.passed = grad_err <= 1e-5 && sketch_err <= 1e-9;
        g.detail = fmt("gradient FD %.3g, ", grad_err) + fmt("hess_sketch %.3g", sketch_err);
    }));

    groups.push_back(timed("self_concordance", [&](CheckGroup& g) {
        Rng data_rng(seed + 3);
        Matrix ab(32, 4);
        ab << gaussian(24, 4, data_rng), Matrix::Identity(4, 4), -Matrix::Identity(4, 4);
        const LogBarrierProblem barrier(ab, Vector::Ones(32), gaussian(4, 1, data_rng).col(0), 1.0);
        std::size_t violations = 0;
        std::size_t checked = 0;
        for (int t = 0; t < 20; ++t) {
            Vector x = 0.05 * gaussian(4, 1, rng).col(0);
            if (!barrier.in_domain(x)) continue;
            const SpdMatrix hx(barrier.full_hessian(x));
            Vector step = gaussian(4, 1, rng).col(0);
            step *= 0.9 * std::uniform_real_distribution<double>(0.0, 1.0)(rng) / local_norm(step, hx);
            std::vector<Vector> dirs;
            for (int k = 0; k < 5; ++k) dirs.push_back(gaussian(4, 1, rng).col(0));
            const SelfConcordanceReport r = self_concordance_check(barrier, x, x + step, dirs);
            violations += r.violations;
            checked += r.checked;
        }
        g.passed = violations == 0 && checked > 0;
        g.detail = std::to_string(violations) + " violations over " + std::to_string(checked) + " directions";
    }));

    groups.push_back(timed("classic_equivalence", [&](CheckGroup& g) {
        double worst = 0.0;
        for (int trial = 0; trial < 40; ++trial) {
            const Matrix h = random_spd(d, rng);
            const Matrix m = gaussian(d, d, rng);
            const InverseEstimate b{m * m.transpose() / static_cast<double>(d) + Matrix::Identity(d, d)};
            const Vector s = gaussian(d, 1, rng).col(0);
            const Vector y = h * s;
            const Matrix classic = classic_bfgs_update(b, s, y).estimate.b;
            const Matrix sketched = update(b, SketchSample{s}, y).b;
            worst = std::max(worst, (classic - sketched).norm() / classic.norm());
        }
        g.passed = worst <= 1e-9;
        g.detail = fmt("max relative difference %.3g", worst);
    }));

    return groups;
}

}  // namespace rbfgs::cli
