#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rbfgs/matcore.hpp"
#include "rbfgs/sketch.hpp"

namespace rbfgs {

// Objective oracle. Every method is const and pure; methods taking a point
// throw DomainError when the point is outside the domain.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string_view family() const = 0;
    virtual std::size_t dim() const = 0;
    virtual bool in_domain(const Vector& x) const { return x.size() == static_cast<Eigen::Index>(dim()); }

    virtual double value(const Vector& x) const = 0;
    virtual Vector gradient(const Vector& x) const = 0;
    // Y = H_x S from the problem's structure; H is never formed.
    virtual Matrix hess_sketch(const Vector& x, const SketchSample& s) const = 0;
    // Dense symmetric Hessian at x (PSD; PD for strongly convex problems).
    virtual Matrix full_hessian(const Vector& x) const = 0;

    // d x n matrix whose columns a_i define the Hessian as
    // sum_i w_i(x) a_i a_i^T; source of the SVD sketch directions.
    virtual Matrix sketch_data_matrix() const = 0;

protected:
    void check_point(const Vector& x) const;
};

// f(x) = 1/2 ||A x||^2 with A square.
class QuadraticProblem final : public Problem {
public:
    explicit QuadraticProblem(Matrix a);

    std::string_view family() const override { return "quadratic"; }
    std::size_t dim() const override { return static_cast<std::size_t>(a_.cols()); }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    Matrix hess_sketch(const Vector& x, const SketchSample& s) const override;
    Matrix full_hessian(const Vector& x) const override;
    Matrix sketch_data_matrix() const override { return a_.transpose(); }

    const Matrix& data() const noexcept { return a_; }

private:
    Matrix a_;
};

enum class GlmLink { logistic, square };

std::string_view to_string(GlmLink link);

struct CurvatureBounds {
    double ell = 0.0;
    double u = 0.0;
};

// f(x) = (1/n) sum_i phi_i(<a_i, x>) + (lambda/2) ||x||^2 with a_i the
// columns of the d x n data matrix.
//   logistic: phi_i(t) = log(1 + exp(-b_i t)), labels in {-1, +1}
//   square:   phi_i(t) = (t - b_i)^2 / 2, labels default to zero
class GlmProblem final : public Problem {
public:
    GlmProblem(Matrix a, std::optional<Vector> labels, GlmLink link, double reg);

    std::string_view family() const override { return link_ == GlmLink::logistic ? "logistic" : "square"; }
    std::size_t dim() const override { return static_cast<std::size_t>(a_.rows()); }
    std::size_t samples() const { return static_cast<std::size_t>(a_.cols()); }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    Matrix hess_sketch(const Vector& x, const SketchSample& s) const override;
    Matrix full_hessian(const Vector& x) const override;
    Matrix sketch_data_matrix() const override { return a_; }

    GlmLink link() const noexcept { return link_; }
    double reg() const noexcept { return reg_; }
    const Matrix& data() const noexcept { return a_; }
    const Vector& labels() const noexcept { return b_; }

    // phi_i''(<a_i, x>) for every sample.
    Vector curvatures(const Vector& x) const;

    // (u/n) A A^T + lambda I, a global Hessian upper bound (u = 1/4 for
    // logistic, 1 for square).
    Matrix hessian_upper_bound() const;

    // lambda_max((1/(4n)) A A^T): smoothness constant of the unregularized
    // logistic loss, by power iteration.
    double logistic_smoothness() const;

private:
    Matrix a_;
    Vector b_;
    GlmLink link_;
    double reg_;
};

// f(x) = w <c, x> - sum_i log(b_i - <a_i, x>) with a_i^T the rows of the
// n x d matrix A; domain A x < b.
class LogBarrierProblem final : public Problem {
public:
    LogBarrierProblem(Matrix a, Vector b, Vector c, double barrier_weight);

    std::string_view family() const override { return "barrier"; }
    std::size_t dim() const override { return static_cast<std::size_t>(a_.cols()); }
    bool in_domain(const Vector& x) const override;
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    Matrix hess_sketch(const Vector& x, const SketchSample& s) const override;
    Matrix full_hessian(const Vector& x) const override;
    Matrix sketch_data_matrix() const override { return a_.transpose(); }

    // b - A x; throws DomainError unless every entry is positive.
    Vector slacks(const Vector& x) const;

private:
    Matrix a_;
    Vector b_;
    Vector c_;
    double weight_;
};

// Pointwise (min, max) of phi_i''(<a_i, x>) over all samples and probes.
// These are probe-set bounds, not global ones.
CurvatureBounds curvature_bounds(const GlmProblem& problem, std::span<const Vector> probes);

// Barrier analog: the weights 1/slack_i^2 over the probes.
CurvatureBounds curvature_bounds(const LogBarrierProblem& problem, std::span<const Vector> probes);

// log(1 + exp(-t)) without overflow.
double log1p_exp_neg(double t);
double sigmoid(double t);

}  // namespace rbfgs
