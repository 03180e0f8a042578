#include "rbfgs/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <string>

#include "rbfgs/errors.hpp"

namespace rbfgs {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kEigSymmetryTol = 1e-10;
constexpr double kSolveResidualTol = 1e-10;

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(what) + ": expected a square matrix, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) +
                                " does not match " + std::to_string(b));
    }
}

}  // namespace

SpdMatrix::SpdMatrix(const Matrix& m) {
    require_square(m, "SpdMatrix");
    if (!m.allFinite()) throw Error("SpdMatrix: non-finite entry");
    if (asymmetry(m) > kSymmetryTol) {
        throw Error("SpdMatrix: relative asymmetry " + std::to_string(asymmetry(m)) + " exceeds 1e-12");
    }
    m_ = 0.5 * (m + m.transpose());
    llt_.compute(m_);
    if (llt_.info() != Eigen::Success) throw NotPositiveDefinite("SpdMatrix: Cholesky factorization failed");
    const Vector pivots = Matrix(llt_.matrixL()).diagonal();
    if (m_.rows() > 0 && !(pivots.minCoeff() > 0.0)) {
        throw NotPositiveDefinite("SpdMatrix: zero pivot");
    }
}

SpdMatrix SpdMatrix::identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return SpdMatrix(Matrix::Identity(n, n));
}

double asymmetry(const Matrix& m) {
    require_square(m, "asymmetry");
    const double scale = m.norm();
    if (scale == 0.0) return 0.0;
    return (m - m.transpose()).norm() / scale;
}

double weighted_fro_norm(const Matrix& w, const SpdMatrix& h) {
    require_square(w, "weighted_fro_norm");
    require_same_dim(w.rows(), static_cast<Eigen::Index>(h.dim()), "weighted_fro_norm");
    const Matrix l = h.cholesky_factor();
    // trace(H W H W^T) = ||L^T W L||_F^2 for H = L L^T.
    return (l.transpose() * w * l).norm();
}

double inverse_error_norm(const Matrix& b, const SpdMatrix& h) {
    require_square(b, "inverse_error_norm");
    require_same_dim(b.rows(), static_cast<Eigen::Index>(h.dim()), "inverse_error_norm");
    const Matrix l = h.cholesky_factor();
    Matrix e = l.transpose() * b * l;
    e.diagonal().array() -= 1.0;
    return e.norm();
}

double local_norm(const Vector& v, const SpdMatrix& h) {
    require_same_dim(v.size(), static_cast<Eigen::Index>(h.dim()), "local_norm");
    return (h.cholesky_factor().transpose() * v).norm();
}

Matrix spd_solve(const SpdMatrix& h, const Matrix& rhs) {
    require_same_dim(rhs.rows(), static_cast<Eigen::Index>(h.dim()), "spd_solve");
    Matrix x = h.llt().solve(rhs);
    const double scale = rhs.norm();
    for (int refine = 0; refine < 2; ++refine) {
        const Matrix residual = rhs - h.matrix() * x;
        if (residual.norm() <= kSolveResidualTol * scale) return x;
        x += h.llt().solve(residual);
    }
    if ((rhs - h.matrix() * x).norm() > kSolveResidualTol * scale) {
        throw NotPositiveDefinite("spd_solve: residual above 1e-10 relative; matrix is numerically singular");
    }
    return x;
}

Vector spd_solve(const SpdMatrix& h, const Vector& rhs) {
    return spd_solve(h, Matrix(rhs)).col(0);
}

Matrix spd_inverse(const SpdMatrix& h) {
    const auto n = static_cast<Eigen::Index>(h.dim());
    Matrix inv = h.llt().solve(Matrix::Identity(n, n));
    return 0.5 * (inv + inv.transpose());
}

SpdMatrix spd_sqrt(const SpdMatrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h.matrix());
    if (eig.info() != Eigen::Success) throw NotPositiveDefinite("spd_sqrt: eigendecomposition failed");
    const Vector& lambda = eig.eigenvalues();
    if (lambda.size() > 0 && !(lambda.minCoeff() > 0.0)) {
        throw NotPositiveDefinite("spd_sqrt: nonpositive eigenvalue");
    }
    const Matrix& q = eig.eigenvectors();
    const Matrix r = q * lambda.cwiseSqrt().asDiagonal() * q.transpose();
    return SpdMatrix(0.5 * (r + r.transpose()));
}

namespace {

Vector checked_eigenvalues(const Matrix& m) {
    require_square(m, "sym_eig");
    if (asymmetry(m) > kEigSymmetryTol) throw Error("sym_eig: input is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw Error("sym_eig: eigendecomposition failed");
    return eig.eigenvalues();
}

}  // namespace

double sym_eig_min(const Matrix& m) { return checked_eigenvalues(m).minCoeff(); }

double sym_eig_max(const Matrix& m) { return checked_eigenvalues(m).maxCoeff(); }

ReducedSvd reduced_svd(const Matrix& a, double tol) {
    ReducedSvd out;
    if (a.size() == 0) {
        out.u.resize(a.rows(), 0);
        out.v.resize(a.cols(), 0);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > tol * smax && s(rank) > 0.0) ++rank;
    out.u = svd.matrixU().leftCols(rank);
    out.sigma = s.head(rank);
    out.v = svd.matrixV().leftCols(rank);
    return out;
}

Matrix hilbert(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    Matrix h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) h(i, j) = 1.0 / static_cast<double>(i + j + 1);
    return h;
}

double condition_number(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) throw Error("condition_number: zero matrix");
    const double floor =
        s(0) * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.rows(), a.cols()));
    double smin = s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > floor) smin = s(i);
    return s(0) / smin;
}

}  // namespace rbfgs
