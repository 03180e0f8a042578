#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rbfgs/errors.hpp"
#include "rbfgs/matcore.hpp"

using namespace rbfgs;
using rbfgs::testing::gaussian;
using rbfgs::testing::random_spd;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}  // namespace

TEST(SpdMatrix, RejectsIndefiniteAndAsymmetric) {
    EXPECT_THROW(SpdMatrix(diag2(1.0, -1.0)), NotPositiveDefinite);
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.5;
    EXPECT_THROW(SpdMatrix{asym}, Error);
    EXPECT_THROW(SpdMatrix(Matrix::Zero(2, 3)), Error);
}

TEST(SpdMatrix, SymmetrizesTinyDrift) {
    Matrix m = diag2(2.0, 3.0);
    m(0, 1) = 1e-14;
    const SpdMatrix h(m);
    EXPECT_EQ(h.matrix()(0, 1), h.matrix()(1, 0));
}

TEST(WeightedFroNorm, Examples) {
    EXPECT_DOUBLE_EQ(weighted_fro_norm(Matrix::Zero(2, 2), SpdMatrix::identity(2)), 0.0);
    EXPECT_NEAR(weighted_fro_norm(Matrix::Identity(2, 2), SpdMatrix::identity(2)), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(weighted_fro_norm(Matrix::Identity(2, 2), SpdMatrix(diag2(2.0, 4.0))), std::sqrt(20.0), 1e-14);
    EXPECT_THROW(weighted_fro_norm(Matrix::Identity(3, 3), SpdMatrix::identity(2)), DimensionMismatch);
}

TEST(WeightedFroNorm, IdentityWeightIsFrobenius) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const Matrix w = gaussian(6, 6, rng);
        EXPECT_NEAR(weighted_fro_norm(w, SpdMatrix::identity(6)), w.norm(), 1e-12 * w.norm());
    }
}

TEST(WeightedFroNorm, MatchesTraceFormula) {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const Matrix h = random_spd(5, rng);
        const Matrix w = rbfgs::testing::random_symmetric(5, rng);
        const double oracle = rbfgs::testing::dense_weighted_fro(w, h);
        EXPECT_NEAR(weighted_fro_norm(w, SpdMatrix(h)), oracle, 1e-10 * oracle);
        EXPECT_NEAR(weighted_fro_norm(w.transpose(), SpdMatrix(h)), oracle, 1e-10 * oracle);
    }
}

TEST(LocalNorm, Examples) {
    EXPECT_DOUBLE_EQ(local_norm(Vector::Zero(2), SpdMatrix::identity(2)), 0.0);
    EXPECT_DOUBLE_EQ(local_norm(Vector::Unit(2, 0), SpdMatrix::identity(2)), 1.0);
    EXPECT_NEAR(local_norm(Vector::Ones(2), SpdMatrix(diag2(2.0, 4.0))), std::sqrt(6.0), 1e-15);
    EXPECT_THROW(local_norm(Vector::Ones(3), SpdMatrix::identity(2)), DimensionMismatch);
}

TEST(LocalNorm, AgreesWithSquareRoot) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const SpdMatrix h(random_spd(7, rng));
        const Vector v = rbfgs::testing::gaussian_vector(7, rng);
        const double lhs = std::pow(local_norm(v, h), 2);
        const double rhs = (spd_sqrt(h).matrix() * v).squaredNorm();
        EXPECT_NEAR(lhs, rhs, 1e-9 * rhs);
    }
}

TEST(SpdSolve, Examples) {
    const Vector v = Vector::LinSpaced(3, 1.0, 3.0);
    EXPECT_EQ(spd_solve(SpdMatrix::identity(3), v), v);
    Vector rhs(2);
    rhs << 2.0, 4.0;
    EXPECT_TRUE(spd_solve(SpdMatrix(diag2(2.0, 4.0)), rhs).isApprox(Vector::Ones(2), 1e-15));
}

TEST(SpdSolve, RecoversKnownSolution) {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        const Matrix h = random_spd(10, rng, 1e4);
        const Vector x0 = rbfgs::testing::gaussian_vector(10, rng);
        const Vector x = spd_solve(SpdMatrix(h), Vector(h * x0));
        EXPECT_LE((x - x0).norm(), 1e-10 * std::max(1.0, x0.norm()) * 1e4);
        EXPECT_LE((h * x - h * x0).norm(), 1e-9 * (h * x0).norm());
        const Matrix rhs = gaussian(10, 3, rng);
        EXPECT_LE((h * spd_solve(SpdMatrix(h), rhs) - rhs).norm(), 1e-9 * rhs.norm());
    }
}

TEST(SpdSqrt, Examples) {
    EXPECT_TRUE(spd_sqrt(SpdMatrix::identity(3)).matrix().isApprox(Matrix::Identity(3, 3), 1e-15));
    EXPECT_TRUE(spd_sqrt(SpdMatrix(diag2(4.0, 9.0))).matrix().isApprox(diag2(2.0, 3.0), 1e-14));
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const Matrix h = random_spd(8, rng);
        const Matrix r = spd_sqrt(SpdMatrix(h)).matrix();
        EXPECT_LE((r * r - h).norm(), 1e-10 * h.norm());
        EXPECT_LE(asymmetry(r), 1e-12);
    }
}

TEST(SymEig, Examples) {
    EXPECT_NEAR(sym_eig_min(Matrix::Identity(3, 3)), 1.0, 1e-15);
    EXPECT_NEAR(sym_eig_min(diag2(3.0, -2.0)), -2.0, 1e-15);
    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    EXPECT_NEAR(sym_eig_min(m), 1.0, 1e-14);
    EXPECT_NEAR(sym_eig_max(m), 3.0, 1e-14);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = 1.0;
    EXPECT_THROW(sym_eig_min(bad), Error);
}

TEST(ReducedSvd, Examples) {
    const ReducedSvd id = reduced_svd(Matrix::Identity(3, 3), 1e-8);
    EXPECT_EQ(id.rank(), 3u);
    EXPECT_TRUE(id.sigma.isApprox(Vector::Ones(3)));
    EXPECT_TRUE((id.u.cwiseAbs()).isApprox(Matrix::Identity(3, 3)));
    EXPECT_EQ(reduced_svd(diag2(1.0, 1e-12), 1e-8).rank(), 1u);
    EXPECT_EQ(reduced_svd(Matrix::Zero(2, 3), 1e-8).rank(), 0u);
}

TEST(ReducedSvd, ReconstructsAndIsOrthonormal) {
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        const Matrix a = gaussian(5, 20, rng);
        const ReducedSvd s = reduced_svd(a, 1e-8);
        ASSERT_EQ(s.rank(), 5u);
        EXPECT_LE((a - s.u * s.sigma.asDiagonal() * s.v.transpose()).norm(), 1e-10 * a.norm());
        EXPECT_LE((s.u.transpose() * s.u - Matrix::Identity(5, 5)).norm(), 1e-10);
        EXPECT_LE((s.v.transpose() * s.v - Matrix::Identity(5, 5)).norm(), 1e-10);
        EXPECT_TRUE((s.sigma.array() > 0.0).all());
    }
}

TEST(Hilbert, Entries) {
    EXPECT_EQ(hilbert(1), Matrix::Ones(1, 1));
    Matrix h2(2, 2);
    h2 << 1.0, 1.0 / 2.0, 1.0 / 2.0, 1.0 / 3.0;
    EXPECT_EQ(hilbert(2), h2);
    const Matrix h3 = hilbert(3);
    EXPECT_DOUBLE_EQ(h3(2, 0), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(h3(2, 1), 1.0 / 4.0);
    EXPECT_DOUBLE_EQ(h3(2, 2), 1.0 / 5.0);
}

TEST(Hilbert, SymmetricPositiveDefiniteUpTo12) {
    for (std::size_t d = 1; d <= 12; ++d) {
        const Matrix h = hilbert(d);
        EXPECT_EQ(h, h.transpose());
        EXPECT_NO_THROW(SpdMatrix{h}) << "d = " << d;
    }
}

TEST(ConditionNumber, Examples) {
    EXPECT_NEAR(condition_number(Matrix::Identity(4, 4)), 1.0, 1e-14);
    EXPECT_NEAR(condition_number(diag2(10.0, 1.0)), 10.0, 1e-13);
    const double k6 = condition_number(hilbert(6));
    Eigen::JacobiSVD<Matrix> svd(hilbert(6));
    const Vector s = svd.singularValues();
    EXPECT_NEAR(k6, s(0) / s(5), 1e-6 * k6);
    EXPECT_GE(k6, 1e7);
    EXPECT_LE(k6, std::pow(1.0 + std::sqrt(2.0), 24) * 100.0);
    EXPECT_THROW(condition_number(Matrix::Zero(2, 2)), Error);
}

TEST(InverseErrorNorm, ZeroAtInverse) {
    Rng rng(7);
    const SpdMatrix h(random_spd(6, rng));
    EXPECT_LE(inverse_error_norm(spd_inverse(h), h), 1e-10);
    EXPECT_NEAR(inverse_error_norm(Matrix::Zero(6, 6), h), std::sqrt(6.0), 1e-12);
}

TEST(PowerIteration, FindsLargestEigenvalue) {
    Rng rng(8);
    Vector eigs = Vector::LinSpaced(6, 1.0, 6.0);
    const Matrix h = rbfgs::testing::spd_with_spectrum(eigs, rng);
    const double l = power_iteration([&](const Vector& v) -> Vector { return h * v; }, 6, 500, 1e-12);
    EXPECT_NEAR(l, 6.0, 1e-6);
}
