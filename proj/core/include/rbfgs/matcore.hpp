#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstddef>

namespace rbfgs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric positive definite matrix. The input is symmetrized on
// construction and validated by a Cholesky factorization, which is kept for
// solves and weighted norms.
class SpdMatrix {
public:
    // Throws DimensionMismatch for non-square input, Error when the relative
    // asymmetry exceeds 1e-12 or an entry is not finite, NotPositiveDefinite
    // when the factorization fails.
    explicit SpdMatrix(const Matrix& m);

    static SpdMatrix identity(std::size_t dim);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    // Lower-triangular L with H = L L^T.
    Matrix cholesky_factor() const { return llt_.matrixL(); }
    const Eigen::LLT<Matrix>& llt() const noexcept { return llt_; }

private:
    Matrix m_;
    Eigen::LLT<Matrix> llt_;
};

// Relative asymmetry ||M - M^T||_F / ||M||_F (0 for the zero matrix).
double asymmetry(const Matrix& m);

// ||H^{1/2} W H^{1/2}||_F = sqrt(trace(H W H W^T)).
double weighted_fro_norm(const Matrix& w, const SpdMatrix& h);

// ||B - H^{-1}||_{F(H)} evaluated as ||L^T B L - I||_F, without inverting H.
double inverse_error_norm(const Matrix& b, const SpdMatrix& h);

// sqrt(<H v, v>).
double local_norm(const Vector& v, const SpdMatrix& h);

// Solves H X = rhs through the stored factorization; the residual is checked
// against 1e-10 ||rhs||.
Matrix spd_solve(const SpdMatrix& h, const Matrix& rhs);
Vector spd_solve(const SpdMatrix& h, const Vector& rhs);

// Explicit inverse H^{-1}, symmetrized.
Matrix spd_inverse(const SpdMatrix& h);

// Symmetric square root R with R R = H.
SpdMatrix spd_sqrt(const SpdMatrix& h);

double sym_eig_min(const Matrix& m);
double sym_eig_max(const Matrix& m);

struct ReducedSvd {
    Matrix u;        // d x r, orthonormal columns
    Vector sigma;    // r positive singular values, descending
    Matrix v;        // n x r, orthonormal columns

    std::size_t rank() const noexcept { return static_cast<std::size_t>(sigma.size()); }
};

inline constexpr double kDefaultSvdTolerance = 1e-8;

// Thin SVD of a d x n matrix; singular values <= tol * sigma_max are dropped.
ReducedSvd reduced_svd(const Matrix& a, double tol = kDefaultSvdTolerance);

// Hilbert matrix, entry (i, j) = 1 / (i + j - 1) with 1-based indices.
Matrix hilbert(std::size_t d);

// sigma_max / sigma_min over the nonzero singular values.
double condition_number(const Matrix& a);

// Largest eigenvalue of a symmetric PSD operator by power iteration.
template <typename ApplyFn>
double power_iteration(ApplyFn&& apply, std::size_t dim, int max_steps = 50, double tol = 1e-6) {
    Vector v = Vector::Ones(static_cast<Eigen::Index>(dim)).normalized();
    double lambda = 0.0;
    for (int step = 0; step < max_steps; ++step) {
        Vector w = apply(v);
        const double next = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (step > 0 && std::abs(next - lambda) <= tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace rbfgs
