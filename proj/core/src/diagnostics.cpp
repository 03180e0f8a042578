#include "rbfgs/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbfgs/errors.hpp"

namespace rbfgs {
namespace {

// Z = R S (S^T H S)^{-1} S^T R with R = H^{1/2}; S^T H S is taken as
// (R S)^T (R S) so it stays exactly PSD.
Matrix projection(const Matrix& root, const Matrix& s) {
    const Matrix rs = root * s;
    const Matrix m = rs.transpose() * rs;
    Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success) throw RejectedSketch("projection: singular S^T H S");
    Matrix z = rs * ldlt.solve(rs.transpose());
    return 0.5 * (z + z.transpose());
}

}  // namespace

std::string_view to_string(RhoMethod m) {
    return m == RhoMethod::exact_enumeration ? "exact_enumeration" : "monte_carlo";
}

ProjectionEstimate expected_projection(const SpdMatrix& h, const SketchSpec& spec, std::size_t mc_samples, Rng& rng) {
    const std::size_t d = h.dim();
    const Matrix root = spd_sqrt(h).matrix();
    ProjectionEstimate out;
    if (is_enumerable(spec)) {
        out.method = RhoMethod::exact_enumeration;
        out.mean = Matrix::Zero(root.rows(), root.cols());
        for (const SketchOutcome& o : enumerate_outcomes(spec, d)) {
            out.mean += o.probability * projection(root, o.sample.s);
            ++out.samples;
        }
        return out;
    }

    if (mc_samples < 2) throw Error("expected_projection: Monte Carlo needs at least two samples");
    out.method = RhoMethod::monte_carlo;
    out.fell_back = true;
    Matrix sum = Matrix::Zero(root.rows(), root.cols());
    Matrix sum_sq = Matrix::Zero(root.rows(), root.cols());
    std::size_t redraws = 0;
    while (out.samples < mc_samples) {
        Matrix z;
        try {
            z = projection(root, sample(spec, d, rng).s);
        } catch (const RejectedSketch&) {
            if (++redraws > mc_samples) throw;
            continue;
        }
        sum += z;
        sum_sq += z.cwiseProduct(z);
        ++out.samples;
    }
    const auto n = static_cast<double>(out.samples);
    out.mean = sum / n;
    const Matrix var = ((sum_sq / n) - out.mean.cwiseProduct(out.mean)) * (n / (n - 1.0));
    out.std_err = std::sqrt(std::max(0.0, var.sum()) / n);
    return out;
}

ProjectionEstimate expected_projection(const Problem& problem, const Vector& x, const SketchSpec& spec,
                                       std::size_t mc_samples, Rng& rng) {
    return expected_projection(SpdMatrix(problem.full_hessian(x)), spec, mc_samples, rng);
}

namespace {

void absorb(RhoReport& report, const ProjectionEstimate& est) {
    const double lambda = sym_eig_min(est.mean);
    report.per_point.push_back(lambda);
    report.method = est.method;
    report.samples = est.samples;
    report.fell_back = report.fell_back || est.fell_back;
    if (report.per_point.size() == 1 || lambda < report.rho) {
        report.rho = lambda;
        if (est.method == RhoMethod::monte_carlo) report.std_err = est.std_err;
    }
}

void finalize(RhoReport& report) { report.rho = std::max(0.0, report.rho); }

}  // namespace

RhoReport rho_at(const Problem& problem, std::span<const Vector> points, const SketchSpec& spec,
                 std::size_t mc_samples, Rng& rng) {
    if (points.empty()) throw Error("rho_at: no probe points");
    RhoReport report;
    for (const Vector& x : points) {
        report.eval_points.push_back(x);
        absorb(report, expected_projection(problem, x, spec, mc_samples, rng));
    }
    finalize(report);
    return report;
}

RhoReport rho_at(const SpdMatrix& h, const SketchSpec& spec, std::size_t mc_samples, Rng& rng) {
    RhoReport report;
    absorb(report, expected_projection(h, spec, mc_samples, rng));
    finalize(report);
    return report;
}

SvdRho svd_sketch_rho(const Matrix& data, const Vector& curvatures, double tol) {
    if (curvatures.size() != data.cols()) throw DimensionMismatch("svd_sketch_rho: one curvature per sample");
    if ((curvatures.array() <= 0.0).any()) throw Error("svd_sketch_rho: curvatures must be positive");
    const ReducedSvd svd = reduced_svd(data, tol);
    SvdRho out;
    out.rank = svd.rank();
    out.dim = static_cast<std::size_t>(data.rows());
    if (out.rank == 0) return out;
    const Matrix k = svd.v.transpose() * curvatures.asDiagonal() * svd.v;
    const Vector scale = k.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix m = scale.asDiagonal() * k * scale.asDiagonal();
    out.rho_on_range = std::max(0.0, sym_eig_min(0.5 * (m + m.transpose()))) / static_cast<double>(out.rank);
    out.rho = out.rank == out.dim ? out.rho_on_range : 0.0;
    return out;
}

RateBound rho_bound_glm(const CurvatureBounds& bounds, std::size_t d) {
    if (!(bounds.u > 0.0)) throw Error("rho_bound_glm: u must be positive");
    if (d == 0) throw Error("rho_bound_glm: dimension must be positive");
    return {bounds.ell / (bounds.u * static_cast<double>(d)), bounds.ell == 0.0};
}

double gd_rate_gap(const Matrix& data, const CurvatureBounds& bounds) {
    if (!(bounds.u > 0.0)) throw Error("gd_rate_bound: u must be positive");
    const double kappa = condition_number(data);
    return (bounds.ell / bounds.u) / (kappa * kappa);
}

double gd_rate_bound(const Matrix& data, const CurvatureBounds& bounds) { return 1.0 - gd_rate_gap(data, bounds); }

double lyapunov_phi(const Matrix& b, const Vector& x, const Vector& x_star, const SpdMatrix& h_star, double rho) {
    if (!(rho > 0.0)) throw Error("lyapunov_phi: rho must be positive");
    const double sigma = 3.0 / rho;
    const double berr = inverse_error_norm(b, h_star);
    return sigma * berr * berr + local_norm(x - x_star, h_star);
}

double lyapunov_psi(const Matrix& b, double f_gap, const SpdMatrix& h_star, const SmoothnessConstants& c, double rho) {
    if (!(c.mu > 0.0 && c.l1 > 0.0 && c.l2 > 0.0 && rho > 0.0)) {
        throw Error("lyapunov_psi: mu, L1, L2 and rho must be positive");
    }
    if (f_gap < 0.0) throw Error("lyapunov_psi: negative function gap");
    const double beta = 4.0 * std::sqrt(2.0) * std::pow(c.l1, 2.5) / (c.mu * c.l2 * rho);
    const double berr = inverse_error_norm(b, h_star);
    return std::sqrt(f_gap) + beta * berr * berr;
}

LyapunovSample lyapunov_sample(const Matrix& b, const Vector& x, double f_gap, const Reference& ref,
                               const SmoothnessConstants& c, double rho) {
    if (!(ref.grad_norm <= kReferenceGradTol)) throw Error("lyapunov_sample: reference is not validated");
    const SpdMatrix h_star(ref.h_star);
    LyapunovSample out;
    const double berr = inverse_error_norm(b, h_star);
    out.b_err_sq = berr * berr;
    out.x_err_local = local_norm(x - ref.x_star, h_star);
    out.f_gap_sqrt = std::sqrt(std::max(0.0, f_gap));
    out.phi = lyapunov_phi(b, x, ref.x_star, h_star, rho);
    out.psi = lyapunov_psi(b, std::max(0.0, f_gap), h_star, c, rho);
    return out;
}

double region_radius_thm1(double rho, std::size_t d) {
    if (!(rho > 0.0 && rho <= 1.0)) throw Error("region_radius_thm1: rho must lie in (0, 1]");
    const double inner = std::sqrt((1.0 - rho) / (1.0 - 2.0 * rho / 3.0));
    const double first = 1.5 - 0.5 * std::sqrt(1.0 + 8.0 * inner);
    const double second = rho * (2.0 - rho) / (69.0 * static_cast<double>(d) + 5.0 * rho);
    return 0.5 * std::max(0.0, std::min(first, second));
}

double region_radius_thm2(const SmoothnessConstants& c, std::size_t d, double rho) {
    if (!(c.mu > 0.0 && c.l1 > 0.0 && c.l2 > 0.0 && rho > 0.0)) {
        throw Error("region_radius_thm2: constants must be positive");
    }
    const double mu2 = c.mu * c.mu;
    const double bracket = std::sqrt(2.0 * c.l1) * c.l2 / mu2 +
                           32.0 * std::sqrt(2.0) * static_cast<double>(d) * std::pow(c.l1, 2.5) * c.l2 /
                               (rho * mu2 * mu2);
    return 0.25 / (bracket * bracket);
}

double estimate_hessian_lipschitz(const Problem& problem, const Vector& center, double radius, std::size_t pairs,
                                  Rng& rng) {
    std::normal_distribution<double> normal;
    const auto d = center.size();
    double best = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        Vector x = center;
        Vector dir(d);
        for (Eigen::Index j = 0; j < d; ++j) dir(j) = normal(rng);
        x += radius * dir.normalized();
        for (Eigen::Index j = 0; j < d; ++j) dir(j) = normal(rng);
        const Vector y = x + radius * dir.normalized();
        if (!problem.in_domain(x) || !problem.in_domain(y)) continue;
        const Matrix diff = problem.full_hessian(y) - problem.full_hessian(x);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (diff + diff.transpose()), Eigen::EigenvaluesOnly);
        const double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
        best = std::max(best, spectral / (y - x).norm());
    }
    return best;
}

SmoothnessConstants glm_constants(const GlmProblem& problem, const CurvatureBounds& bounds, const Vector& center,
                                  Rng& rng, std::size_t pairs, double radius) {
    Eigen::JacobiSVD<Matrix> svd(problem.data());
    const Vector& s = svd.singularValues();
    const auto n = static_cast<double>(problem.samples());
    SmoothnessConstants c;
    const double smin = problem.data().rows() <= problem.data().cols() ? s(s.size() - 1) : 0.0;
    c.mu = problem.reg() + bounds.ell * smin * smin / n;
    c.l1 = problem.reg() + bounds.u * s(0) * s(0) / n;
    c.l2 = estimate_hessian_lipschitz(problem, center, radius, pairs, rng);
    return c;
}

SelfConcordanceReport self_concordance_check(const Problem& problem, const Vector& x, const Vector& y,
                                             std::span<const Vector> directions) {
    const SpdMatrix hx(problem.full_hessian(x));
    const SpdMatrix hy(problem.full_hessian(y));
    SelfConcordanceReport out;
    out.distance = local_norm(y - x, hx);
    if (!(out.distance < 1.0)) throw Error("self_concordance_check: ||y - x||_x must be below 1");
    const double lower = 1.0 - out.distance;
    const double upper = 1.0 / (1.0 - out.distance);
    for (const Vector& v : directions) {
        const double nx = local_norm(v, hx);
        if (nx == 0.0) continue;
        const double ratio = local_norm(v, hy) / nx;
        const double excess = std::max(lower - ratio, ratio - upper);
        out.max_violation = std::max(out.max_violation, excess);
        if (excess > kSelfConcordanceSlack) ++out.violations;
        ++out.checked;
    }
    return out;
}

std::vector<double> superlinear_ratios(const Trace& trace, double floor) {
    std::vector<double> out;
    const auto& r = trace.records;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        if (r[i].f_gap < floor || r[i + 1].f_gap < floor) break;
        out.push_back(std::sqrt(r[i + 1].f_gap / r[i].f_gap));
    }
    return out;
}

double least_squares_slope(std::span<const double> values) {
    const auto n = static_cast<double>(values.size());
    if (values.size() < 2) return 0.0;
    const double mean_k = (n - 1.0) / 2.0;
    double mean_v = 0.0;
    for (double v : values) mean_v += v;
    mean_v /= n;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double dk = static_cast<double>(k) - mean_k;
        num += dk * (values[k] - mean_v);
        den += dk * dk;
    }
    return num / den;
}

}  // namespace rbfgs
