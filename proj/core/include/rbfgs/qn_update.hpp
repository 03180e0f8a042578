#pragma once

#include "rbfgs/matcore.hpp"
#include "rbfgs/sketch.hpp"

namespace rbfgs {

// Symmetric estimate B_k of the inverse Hessian.
struct InverseEstimate {
    Matrix b;
};

// Sketched BFGS update of the inverse estimate from S and the Hessian sketch
// Y = H S:
//
//   B+ = G + (I - G H) B (I - H G),   G = S (S^T H S)^{-1} S^T,
//
// evaluated as G + (I - S M^{-1} Y^T) B (I - Y M^{-1} S^T) with M = S^T Y,
// which costs O(d^2 tau) and never forms H. M is symmetrized and must have
// Cholesky pivots above 1e-12 times the largest one; otherwise RejectedSketch
// is thrown and the caller redraws S. The result is re-symmetrized.
InverseEstimate bfgs_update(const InverseEstimate& b, const SketchSample& s, const Matrix& y);

struct ClassicUpdateResult {
    InverseEstimate estimate;
    bool skipped = false;
};

inline constexpr double kCurvatureSkipTol = 1e-10;

// Inverse BFGS update from a step s and gradient change y:
// (I - s y^T / y^T s) B (I - y s^T / y^T s) + s s^T / y^T s.
// When y^T s <= kCurvatureSkipTol * |y| |s| the input is returned unchanged
// with skipped set.
ClassicUpdateResult classic_bfgs_update(const InverseEstimate& b, const Vector& s, const Vector& y);

}  // namespace rbfgs
