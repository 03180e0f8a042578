#include "rbfgs/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbfgs/errors.hpp"

namespace rbfgs {

void Problem::check_point(const Vector& x) const {
    if (x.size() != static_cast<Eigen::Index>(dim())) {
        throw DimensionMismatch(std::string(family()) + ": point has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dim()));
    }
}

double log1p_exp_neg(double t) { return std::log1p(std::exp(-std::abs(t))) + std::max(0.0, -t); }

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------- quadratic

QuadraticProblem::QuadraticProblem(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() == 0) throw DimensionMismatch("quadratic: A must be square and nonempty");
}

double QuadraticProblem::value(const Vector& x) const {
    check_point(x);
    return 0.5 * (a_ * x).squaredNorm();
}

Vector QuadraticProblem::gradient(const Vector& x) const {
    check_point(x);
    return a_.transpose() * (a_ * x);
}

Matrix QuadraticProblem::hess_sketch(const Vector& x, const SketchSample& s) const {
    check_point(x);
    if (s.s.rows() != a_.cols()) throw DimensionMismatch("quadratic: sketch has wrong row count");
    return a_.transpose() * (a_ * s.s);
}

Matrix QuadraticProblem::full_hessian(const Vector& x) const {
    check_point(x);
    Matrix h = a_.transpose() * a_;
    return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------- GLM

std::string_view to_string(GlmLink link) { return link == GlmLink::logistic ? "logistic" : "square"; }

GlmProblem::GlmProblem(Matrix a, std::optional<Vector> labels, GlmLink link, double reg)
    : a_(std::move(a)), link_(link), reg_(reg) {
    if (a_.size() == 0) throw DimensionMismatch("glm: empty data matrix");
    if (!(reg_ >= 0.0)) throw Error("glm: regularization must be nonnegative");
    if (labels) {
        if (labels->size() != a_.cols()) throw DimensionMismatch("glm: one label per sample required");
        b_ = *labels;
    } else {
        if (link_ == GlmLink::logistic) throw Error("glm: logistic loss requires labels");
        b_ = Vector::Zero(a_.cols());
    }
    if (link_ == GlmLink::logistic && ((b_.array() != 1.0) && (b_.array() != -1.0)).any()) {
        throw Error("glm: logistic labels must be -1 or +1");
    }
}

double GlmProblem::value(const Vector& x) const {
    check_point(x);
    const Vector t = a_.transpose() * x;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        sum += link_ == GlmLink::logistic ? log1p_exp_neg(b_(i) * t(i)) : 0.5 * (t(i) - b_(i)) * (t(i) - b_(i));
    }
    return sum / static_cast<double>(samples()) + 0.5 * reg_ * x.squaredNorm();
}

Vector GlmProblem::gradient(const Vector& x) const {
    check_point(x);
    const Vector t = a_.transpose() * x;
    Vector dphi(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        dphi(i) = link_ == GlmLink::logistic ? -b_(i) * sigmoid(-b_(i) * t(i)) : t(i) - b_(i);
    }
    return a_ * dphi / static_cast<double>(samples()) + reg_ * x;
}

Vector GlmProblem::curvatures(const Vector& x) const {
    check_point(x);
    if (link_ == GlmLink::square) return Vector::Ones(a_.cols());
    const Vector t = a_.transpose() * x;
    Vector w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        w(i) = sigmoid(t(i)) * sigmoid(-t(i));
    }
    return w;
}

Matrix GlmProblem::hess_sketch(const Vector& x, const SketchSample& s) const {
    if (s.s.rows() != a_.rows()) throw DimensionMismatch("glm: sketch has wrong row count");
    const Vector w = curvatures(x);
    const Matrix as = a_.transpose() * s.s;  // n x tau
    return a_ * (w.asDiagonal() * as) / static_cast<double>(samples()) + reg_ * s.s;
}

Matrix GlmProblem::full_hessian(const Vector& x) const {
    const Vector w = curvatures(x);
    Matrix h = a_ * w.asDiagonal() * a_.transpose() / static_cast<double>(samples());
    h.diagonal().array() += reg_;
    return 0.5 * (h + h.transpose());
}

Matrix GlmProblem::hessian_upper_bound() const {
    const double u = link_ == GlmLink::logistic ? 0.25 : 1.0;
    Matrix h = (u / static_cast<double>(samples())) * a_ * a_.transpose();
    h.diagonal().array() += reg_;
    return 0.5 * (h + h.transpose());
}

double GlmProblem::logistic_smoothness() const {
    const double scale = 1.0 / (4.0 * static_cast<double>(samples()));
    return power_iteration([&](const Vector& v) -> Vector { return scale * (a_ * (a_.transpose() * v)); }, dim());
}

// ------------------------------------------------------------------ barrier

LogBarrierProblem::LogBarrierProblem(Matrix a, Vector b, Vector c, double barrier_weight)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), weight_(barrier_weight) {
    if (a_.rows() != b_.size() || a_.cols() != c_.size() || a_.size() == 0) {
        throw DimensionMismatch("barrier: A must be n x d with b of length n and c of length d");
    }
    if (!(weight_ > 0.0)) throw Error("barrier: barrier weight must be positive");
}

bool LogBarrierProblem::in_domain(const Vector& x) const {
    if (x.size() != a_.cols() || !x.allFinite()) return false;
    return ((b_ - a_ * x).array() > 0.0).all();
}

Vector LogBarrierProblem::slacks(const Vector& x) const {
    check_point(x);
    Vector r = b_ - a_ * x;
    if (!(r.array() > 0.0).all()) throw DomainError("barrier: point violates A x < b");
    return r;
}

double LogBarrierProblem::value(const Vector& x) const {
    const Vector r = slacks(x);
    return weight_ * c_.dot(x) - r.array().log().sum();
}

Vector LogBarrierProblem::gradient(const Vector& x) const {
    const Vector r = slacks(x);
    return weight_ * c_ + a_.transpose() * r.cwiseInverse();
}

Matrix LogBarrierProblem::hess_sketch(const Vector& x, const SketchSample& s) const {
    if (s.s.rows() != a_.cols()) throw DimensionMismatch("barrier: sketch has wrong row count");
    const Vector w = slacks(x).array().square().inverse();
    return a_.transpose() * (w.asDiagonal() * (a_ * s.s));
}

Matrix LogBarrierProblem::full_hessian(const Vector& x) const {
    const Vector w = slacks(x).array().square().inverse();
    Matrix h = a_.transpose() * w.asDiagonal() * a_;
    return 0.5 * (h + h.transpose());
}

// --------------------------------------------------------------- curvature

CurvatureBounds curvature_bounds(const GlmProblem& problem, std::span<const Vector> probes) {
    if (probes.empty()) throw Error("curvature_bounds: empty probe set");
    CurvatureBounds out{std::numeric_limits<double>::infinity(), 0.0};
    for (const Vector& x : probes) {
        const Vector w = problem.curvatures(x);
        out.ell = std::min(out.ell, w.minCoeff());
        out.u = std::max(out.u, w.maxCoeff());
    }
    return out;
}

CurvatureBounds curvature_bounds(const LogBarrierProblem& problem, std::span<const Vector> probes) {
    if (probes.empty()) throw Error("curvature_bounds: empty probe set");
    CurvatureBounds out{std::numeric_limits<double>::infinity(), 0.0};
    for (const Vector& x : probes) {
        const Vector w = problem.slacks(x).array().square().inverse();
        out.ell = std::min(out.ell, w.minCoeff());
        out.u = std::max(out.u, w.maxCoeff());
    }
    return out;
}

}  // namespace rbfgs
