#include <gtest/gtest.h>

#include <array>

#include "oracles.hpp"
#include "rbfgs/diagnostics.hpp"
#include "rbfgs/errors.hpp"
#include "rbfgs/qn_update.hpp"

using namespace rbfgs;
using rbfgs::testing::dense_bfgs;
using rbfgs::testing::gaussian;
using rbfgs::testing::random_spd;
using rbfgs::testing::random_symmetric;

namespace {

Matrix h_example() {
    Matrix h(2, 2);
    h << 2, 1, 1, 3;
    return h;
}

InverseEstimate update(const Matrix& b, const Matrix& h, const Matrix& s) {
    return bfgs_update(InverseEstimate{b}, SketchSample{s}, h * s);
}

}  // namespace

TEST(BfgsUpdate, FixedPointAtInverse) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const Matrix h = random_spd(8, rng);
        const Matrix hinv = h.inverse();
        const Matrix s = gaussian(8, 1 + t % 4, rng);
        EXPECT_LE(rbfgs::testing::rel_diff(update(hinv, h, s).b, hinv), 1e-9);
    }
}

TEST(BfgsUpdate, InvertibleSketchGivesInverse) {
    Matrix h = Matrix::Zero(2, 2);
    h.diagonal() << 2.0, 4.0;
    Matrix expected = Matrix::Zero(2, 2);
    expected.diagonal() << 0.5, 0.25;
    Rng rng(2);
    for (int t = 0; t < 5; ++t) {
        EXPECT_TRUE(update(random_symmetric(2, rng), h, Matrix::Identity(2, 2)).b.isApprox(expected, 1e-14));
    }
}

TEST(BfgsUpdate, WorkedExample) {
    Matrix expected(2, 2);
    expected << 0.75, -0.5, -0.5, 1.0;
    const Matrix s = Vector::Unit(2, 0);
    const Matrix out = update(Matrix::Identity(2, 2), h_example(), s).b;
    EXPECT_LE((out - expected).norm(), 1e-15);
    EXPECT_LE((dense_bfgs(Matrix::Identity(2, 2), h_example(), s) - expected).norm(), 1e-15);
}

TEST(BfgsUpdate, MatchesDenseFormula) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index d = 3 + t % 8;
        const Matrix h = random_spd(d, rng);
        const Matrix b = random_symmetric(d, rng);
        const Matrix s = gaussian(d, 1 + t % d, rng);
        EXPECT_LE(rbfgs::testing::rel_diff(update(b, h, s).b, dense_bfgs(b, h, s)), 1e-9);
    }
}

TEST(BfgsUpdate, SketchedSecantIdentity) {
    Rng rng(4);
    for (int t = 0; t < 300; ++t) {
        const Matrix h = random_spd(20, rng);
        const Matrix b = random_symmetric(20, rng);
        const Matrix s = gaussian(20, std::array<int, 3>{1, 5, 12}[t % 3], rng);
        const Matrix y = h * s;
        EXPECT_LE((update(b, h, s).b * y - s).norm(), 1e-9 * s.norm());
    }
}

TEST(BfgsUpdate, SymmetricPositiveDefinite) {
    Rng rng(5);
    for (int t = 0; t < 1000; ++t) {
        const Eigen::Index d = 2 + t % 9;
        const Matrix h = random_spd(d, rng);
        const Matrix b = random_spd(d, rng);
        const Matrix out = update(b, h, gaussian(d, 1 + t % d, rng)).b;
        EXPECT_EQ(out, out.transpose());
        EXPECT_NO_THROW(SpdMatrix{out});
    }
}

TEST(BfgsUpdate, ProjectionIdentity) {
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        const Matrix h = random_spd(7, rng);
        const Matrix s = gaussian(7, 1 + t % 5, rng);
        const Matrix g = s * (s.transpose() * h * s).inverse() * s.transpose();
        EXPECT_LE((g * h * g - g).norm(), 1e-9 * g.norm());
        // bfgs_update with B = 0 returns G itself.
        EXPECT_LE(rbfgs::testing::rel_diff(update(Matrix::Zero(7, 7), h, s).b, g), 1e-9);
    }
}

TEST(BfgsUpdate, RejectsSingularSketch) {
    const Matrix h = h_example();
    Matrix s(2, 2);
    s << 1, 1, 0, 0;  // rank one
    EXPECT_THROW(update(Matrix::Identity(2, 2), h, s), RejectedSketch);
    Matrix indefinite(2, 2);
    indefinite << 1, 0, 0, -1;
    EXPECT_THROW(bfgs_update(InverseEstimate{Matrix::Identity(2, 2)}, SketchSample{Matrix::Identity(2, 2)}, indefinite),
                 RejectedSketch);
}

TEST(BfgsUpdate, DimensionChecks) {
    EXPECT_THROW(bfgs_update(InverseEstimate{Matrix::Identity(3, 3)}, SketchSample{Matrix::Identity(2, 2)},
                             Matrix::Identity(2, 2)),
                 DimensionMismatch);
}

TEST(BfgsUpdate, NonExpansiveInHessianNorm) {
    // Per-draw: ||B+ - H^{-1}||_{F(H)} <= ||B - H^{-1}||_{F(H)}.
    Rng rng(7);
    for (int t = 0; t < 300; ++t) {
        const SpdMatrix h(random_spd(6, rng, 1e3));
        const Matrix hinv = spd_inverse(h);
        const Matrix b = random_symmetric(6, rng);
        const Matrix s = gaussian(6, 1 + t % 3, rng);
        const double before = weighted_fro_norm(b - hinv, h);
        const double after = weighted_fro_norm(update(b, h.matrix(), s).b - hinv, h);
        EXPECT_LE(after, before * (1.0 + 1e-10));
    }
}

TEST(ClassicUpdate, Examples) {
    const Vector e1 = Vector::Unit(2, 0);
    const ClassicUpdateResult same = classic_bfgs_update(InverseEstimate{Matrix::Identity(2, 2)}, e1, e1);
    EXPECT_FALSE(same.skipped);
    EXPECT_TRUE(same.estimate.b.isApprox(Matrix::Identity(2, 2), 1e-15));

    const Vector y = h_example() * e1;
    const ClassicUpdateResult r = classic_bfgs_update(InverseEstimate{Matrix::Identity(2, 2)}, e1, y);
    Matrix expected(2, 2);
    expected << 0.75, -0.5, -0.5, 1.0;
    EXPECT_LE((r.estimate.b - expected).norm(), 1e-15);
    EXPECT_LE((r.estimate.b - update(Matrix::Identity(2, 2), h_example(), e1).b).norm(), 1e-15);

    const Vector orth = Vector::Unit(2, 1);
    const Matrix b0 = 2.0 * Matrix::Identity(2, 2);
    const ClassicUpdateResult skip = classic_bfgs_update(InverseEstimate{b0}, e1, orth);
    EXPECT_TRUE(skip.skipped);
    EXPECT_EQ(skip.estimate.b, b0);
}

TEST(ClassicUpdate, EqualsSketchedUpdateOnQuadratics) {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const Matrix h = random_spd(9, rng);
        const Matrix b = random_spd(9, rng);
        const Vector s = rbfgs::testing::gaussian_vector(9, rng);
        const Matrix classic = classic_bfgs_update(InverseEstimate{b}, s, h * s).estimate.b;
        EXPECT_LE(rbfgs::testing::rel_diff(classic, update(b, h, s).b), 1e-9);
    }
}
