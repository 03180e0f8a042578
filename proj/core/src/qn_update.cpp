#include "rbfgs/qn_update.hpp"

#include <Eigen/Cholesky>

#include "rbfgs/errors.hpp"

namespace rbfgs {
namespace {

constexpr double kPivotTol = 1e-12;

}  // namespace

InverseEstimate bfgs_update(const InverseEstimate& b, const SketchSample& sk, const Matrix& y) {
    const Matrix& s = sk.s;
    const Eigen::Index d = b.b.rows();
    if (b.b.cols() != d || s.rows() != d || y.rows() != d || y.cols() != s.cols()) {
        throw DimensionMismatch("bfgs_update: B, S and Y = HS have inconsistent shapes");
    }

    Matrix m = s.transpose() * y;
    m = 0.5 * (m + m.transpose());
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw RejectedSketch("bfgs_update: S^T H S is not positive definite");
    const Vector pivots = Matrix(llt.matrixL()).diagonal().array().square();
    if (!(pivots.minCoeff() > kPivotTol * pivots.maxCoeff())) {
        throw RejectedSketch("bfgs_update: S^T H S is numerically singular");
    }

    // With Q = M^{-1} Y^T the update is G + (I - S Q) B (I - S Q)^T.
    const Matrix by = b.b * y;                                    // d x tau
    const Matrix c = llt.solve(by.transpose());                   // M^{-1} Y^T B, tau x d
    const Matrix cq = llt.solve(Matrix(y.transpose() * c.transpose()));  // M^{-1} Y^T B Y M^{-1}
    const Matrix w = llt.solve(s.transpose());                    // M^{-1} S^T, tau x d

    Matrix out = b.b;
    out.noalias() -= s * c;
    out.noalias() -= c.transpose() * s.transpose();
    out.noalias() += (s * cq) * s.transpose();
    out.noalias() += s * w;
    return {0.5 * (out + out.transpose())};
}

ClassicUpdateResult classic_bfgs_update(const InverseEstimate& b, const Vector& s, const Vector& y) {
    const Eigen::Index d = b.b.rows();
    if (s.size() != d || y.size() != d) throw DimensionMismatch("classic_bfgs_update: shape mismatch");
    const double ys = y.dot(s);
    if (!(ys > kCurvatureSkipTol * y.norm() * s.norm())) return {b, true};

    const double r = 1.0 / ys;
    const Vector by = b.b * y;
    const double yby = y.dot(by);
    // Expanded product; B symmetric.
    Matrix out = b.b;
    out.noalias() -= r * (s * by.transpose() + by * s.transpose());
    out.noalias() += (r * r * yby + r) * (s * s.transpose());
    return {{0.5 * (out + out.transpose())}, false};
}

}  // namespace rbfgs
