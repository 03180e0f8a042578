#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rbfgs/matcore.hpp"

namespace rbfgs {

using Rng = std::mt19937_64;

enum class SketchKind { gauss, coord, svd, svd_no_sigma, fixed_direction, identity };

std::string_view to_string(SketchKind kind);
// Throws ConfigError on an unknown name.
SketchKind parse_sketch_kind(std::string_view name);

// A distribution over d x tau sketching matrices.
struct SketchSpec {
    SketchKind kind = SketchKind::identity;
    std::size_t tau = 1;
    // Candidate columns for svd, svd_no_sigma and fixed_direction.
    std::optional<Matrix> directions;
    // Column weights for fixed_direction; must sum to one.
    std::optional<Vector> probabilities;

    // Throws DimensionMismatch or Error when the spec cannot produce d x tau
    // samples.
    void validate(std::size_t d) const;
    // Number of columns a draw has in dimension d (gauss clamps tau to d,
    // identity always has d columns).
    std::size_t columns(std::size_t d) const;
};

struct SketchSample {
    Matrix s;
};

SketchSample sample(const SketchSpec& spec, std::size_t d, Rng& rng);

struct SketchOutcome {
    SketchSample sample;
    double probability = 0.0;
};

// Every outcome of a discrete spec with its probability. Refuses gauss and
// tau > 1 discrete specs.
std::vector<SketchOutcome> enumerate_outcomes(const SketchSpec& spec, std::size_t d);

bool is_enumerable(const SketchSpec& spec);

// Columns U Sigma^{-1} e_i (with_sigma) or U e_i of the reduced SVD of the
// d x n data matrix A.
Matrix build_svd_directions(const Matrix& a, double tol = kDefaultSvdTolerance, bool with_sigma = true);

// p_i = d_i^T U d_i / trace(D^T U D) for the columns d_i of D.
Vector fixed_direction_probabilities(const Matrix& directions, const Matrix& upper_bound);

SketchSpec make_fixed_direction_spec(const Matrix& directions, const Matrix& upper_bound);

}  // namespace rbfgs
