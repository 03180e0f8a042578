#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rbfgs/matcore.hpp"
#include "rbfgs/problems.hpp"
#include "rbfgs/sketch.hpp"
#include "rbfgs/solvers.hpp"

namespace rbfgs {

enum class RhoMethod { exact_enumeration, monte_carlo };

std::string_view to_string(RhoMethod m);

inline constexpr std::size_t kDefaultMcSamples = 10000;

// E[Z] with Z = H^{1/2} S (S^T H S)^{-1} S^T H^{1/2}.
struct ProjectionEstimate {
    Matrix mean;
    RhoMethod method = RhoMethod::exact_enumeration;
    std::size_t samples = 0;
    // Monte Carlo only: sqrt(sum_ij var(Z_ij) / samples), the expected
    // Frobenius distance of the estimate from E[Z].
    double std_err = 0.0;
    // Set when the spec could not be enumerated and Monte Carlo was used.
    bool fell_back = false;
};

// Exact for enumerable specs, otherwise mc_samples Monte Carlo draws.
ProjectionEstimate expected_projection(const SpdMatrix& h, const SketchSpec& spec, std::size_t mc_samples, Rng& rng);
ProjectionEstimate expected_projection(const Problem& problem, const Vector& x, const SketchSpec& spec,
                                       std::size_t mc_samples, Rng& rng);

// min over the probe points of lambda_min(E[Z_x]). The value is an infimum
// over the probe set only, never a certified global one.
struct RhoReport {
    double rho = 0.0;
    RhoMethod method = RhoMethod::exact_enumeration;
    std::size_t samples = 0;
    std::optional<double> std_err;
    std::vector<Vector> eval_points;
    std::vector<double> per_point;
    bool fell_back = false;
};

RhoReport rho_at(const Problem& problem, std::span<const Vector> points, const SketchSpec& spec,
                 std::size_t mc_samples, Rng& rng);
RhoReport rho_at(const SpdMatrix& h, const SketchSpec& spec, std::size_t mc_samples, Rng& rng);

// rho of the tau = 1 SVD sketch of a GLM evaluated in the data's singular
// basis: with K = V^T diag(w) V, E[Z] is similar to
// diag(K)^{-1/2} K diag(K)^{-1/2} / r. Avoids forming H, so it stays accurate
// for data whose Hessian is not numerically positive definite.
struct SvdRho {
    double rho = 0.0;           // 0 when the truncated rank is below d
    double rho_on_range = 0.0;  // restricted to the span of the kept directions
    std::size_t rank = 0;
    std::size_t dim = 0;
};
SvdRho svd_sketch_rho(const Matrix& data, const Vector& curvatures, double tol = kDefaultSvdTolerance);

struct RateBound {
    double value = 0.0;
    bool vacuous = false;  // ell = 0
};

// ell / (u d): lower bound on rho for the SVD sketch.
RateBound rho_bound_glm(const CurvatureBounds& bounds, std::size_t d);

// 1 - (ell/u) sigma_min(A)^2 / sigma_max(A)^2.
double gd_rate_bound(const Matrix& data, const CurvatureBounds& bounds);
// (ell/u) sigma_min(A)^2 / sigma_max(A)^2, the same quantity without the
// cancellation in 1 - bound.
double gd_rate_gap(const Matrix& data, const CurvatureBounds& bounds);

struct SmoothnessConstants {
    double mu = 0.0;  // strong convexity
    double l1 = 0.0;  // gradient Lipschitz constant
    double l2 = 0.0;  // Hessian Lipschitz constant (estimate)
};

// Phi = (3/rho) ||B - H*^{-1}||^2_{F(H*)} + ||x - x*||_*.
double lyapunov_phi(const Matrix& b, const Vector& x, const Vector& x_star, const SpdMatrix& h_star, double rho);

// Psi = sqrt(f_gap) + beta ||B - H*^{-1}||^2_{F(H*)},
// beta = 4 sqrt(2) L1^{5/2} / (mu L2 rho).
double lyapunov_psi(const Matrix& b, double f_gap, const SpdMatrix& h_star, const SmoothnessConstants& c, double rho);

struct LyapunovSample {
    double phi = 0.0;
    double psi = 0.0;
    double b_err_sq = 0.0;
    double x_err_local = 0.0;
    double f_gap_sqrt = 0.0;
};

LyapunovSample lyapunov_sample(const Matrix& b, const Vector& x, double f_gap, const Reference& ref,
                               const SmoothnessConstants& c, double rho);

// Admissible Phi_0 for the self-concordant linear rate:
// 1/2 min{ 3/2 - 1/2 sqrt(1 + 8 sqrt((1-rho)/(1-2rho/3))), rho (2-rho)/(69 d + 5 rho) }.
double region_radius_thm1(double rho, std::size_t d);

// Admissible initial gap for the strongly convex linear rate:
// 1/4 [ sqrt(2 L1) L2 / mu^2 + 32 sqrt(2) d L1^{5/2} L2 / (rho mu^4) ]^{-2}.
double region_radius_thm2(const SmoothnessConstants& c, std::size_t d, double rho);

// max ||H_y - H_x||_2 / ||y - x||_2 over random pairs with ||y - x|| = radius
// around `center`.
double estimate_hessian_lipschitz(const Problem& problem, const Vector& center, double radius, std::size_t pairs,
                                  Rng& rng);

// mu = lambda + ell sigma_min^2 / n, L1 = lambda + u sigma_max^2 / n, L2 sampled.
SmoothnessConstants glm_constants(const GlmProblem& problem, const CurvatureBounds& bounds, const Vector& center,
                                  Rng& rng, std::size_t pairs = 50, double radius = 1e-3);

struct SelfConcordanceReport {
    double distance = 0.0;       // ||y - x||_x
    double max_violation = 0.0;  // largest excursion outside the bounds
    std::size_t violations = 0;  // directions violating by more than 1e-9
    std::size_t checked = 0;
};

inline constexpr double kSelfConcordanceSlack = 1e-9;

// Checks 1 - r <= ||v||_y / ||v||_x <= 1 / (1 - r), r = ||y - x||_x, for each
// direction. Throws Error when r >= 1.
SelfConcordanceReport self_concordance_check(const Problem& problem, const Vector& x, const Vector& y,
                                             std::span<const Vector> directions);

inline constexpr double kRatioGapFloor = 1e-12;

// sqrt(f_gap_{k+1} / f_gap_k) over consecutive records, stopping at the first
// gap below `floor`.
std::vector<double> superlinear_ratios(const Trace& trace, double floor = kRatioGapFloor);

// Ordinary least-squares slope of values against their index.
double least_squares_slope(std::span<const double> values);

}  // namespace rbfgs
