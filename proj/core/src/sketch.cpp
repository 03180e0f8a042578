#include "rbfgs/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rbfgs/errors.hpp"

namespace rbfgs {
namespace {

constexpr double kProbabilityTol = 1e-12;

std::size_t direction_count(const SketchSpec& spec) {
    return spec.directions ? static_cast<std::size_t>(spec.directions->cols()) : 0;
}

// tau distinct indices from [0, n), uniformly without replacement.
std::vector<Eigen::Index> distinct_indices(std::size_t n, std::size_t tau, Rng& rng) {
    std::vector<Eigen::Index> pool(n);
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (std::size_t i = 0; i < tau; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(tau);
    return pool;
}

Matrix gather_columns(const Matrix& source, const std::vector<Eigen::Index>& cols) {
    Matrix out(source.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = source.col(cols[j]);
    return out;
}

}  // namespace

std::string_view to_string(SketchKind kind) {
    switch (kind) {
        case SketchKind::gauss: return "gauss";
        case SketchKind::coord: return "coord";
        case SketchKind::svd: return "svd";
        case SketchKind::svd_no_sigma: return "svd_no_sigma";
        case SketchKind::fixed_direction: return "fixed_direction";
        case SketchKind::identity: return "identity";
    }
    return "unknown";
}

SketchKind parse_sketch_kind(std::string_view name) {
    for (auto kind : {SketchKind::gauss, SketchKind::coord, SketchKind::svd, SketchKind::svd_no_sigma,
                      SketchKind::fixed_direction, SketchKind::identity}) {
        if (to_string(kind) == name) return kind;
    }
    throw ConfigError("unknown sketch kind '" + std::string(name) + "'");
}

void SketchSpec::validate(std::size_t d) const {
    if (d == 0) throw DimensionMismatch("sketch: dimension must be positive");
    if (tau == 0) throw Error("sketch: tau must be at least 1");
    switch (kind) {
        case SketchKind::identity:
        case SketchKind::gauss:
            return;
        case SketchKind::coord:
            if (tau > d) throw DimensionMismatch("sketch: tau exceeds dimension");
            return;
        case SketchKind::svd:
        case SketchKind::svd_no_sigma:
        case SketchKind::fixed_direction: {
            if (!directions) throw Error("sketch: " + std::string(to_string(kind)) + " requires directions");
            if (static_cast<std::size_t>(directions->rows()) != d) {
                throw DimensionMismatch("sketch: directions have " + std::to_string(directions->rows()) +
                                        " rows, expected " + std::to_string(d));
            }
            if (tau > direction_count(*this)) {
                throw DimensionMismatch("sketch: tau " + std::to_string(tau) + " exceeds the " +
                                        std::to_string(direction_count(*this)) + " available directions");
            }
            if (kind != SketchKind::fixed_direction) return;
            if (tau != 1) throw Error("sketch: fixed_direction draws a single column (tau = 1)");
            if (!probabilities || probabilities->size() != directions->cols()) {
                throw Error("sketch: fixed_direction requires one probability per direction");
            }
            if ((probabilities->array() < 0.0).any() || std::abs(probabilities->sum() - 1.0) > kProbabilityTol) {
                throw Error("sketch: probabilities must be nonnegative and sum to one");
            }
            return;
        }
    }
}

std::size_t SketchSpec::columns(std::size_t d) const {
    switch (kind) {
        case SketchKind::identity: return d;
        case SketchKind::gauss: return std::min(tau, d);
        default: return tau;
    }
}

SketchSample sample(const SketchSpec& spec, std::size_t d, Rng& rng) {
    spec.validate(d);
    const auto n = static_cast<Eigen::Index>(d);
    switch (spec.kind) {
        case SketchKind::identity:
            return {Matrix::Identity(n, n)};
        case SketchKind::gauss: {
            const auto cols = static_cast<Eigen::Index>(spec.columns(d));
            std::normal_distribution<double> normal;
            Matrix s(n, cols);
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < n; ++i) s(i, j) = normal(rng);
            return {s};
        }
        case SketchKind::coord: {
            const auto idx = distinct_indices(d, spec.tau, rng);
            Matrix s = Matrix::Zero(n, static_cast<Eigen::Index>(spec.tau));
            for (std::size_t j = 0; j < idx.size(); ++j) s(idx[j], static_cast<Eigen::Index>(j)) = 1.0;
            return {s};
        }
        case SketchKind::svd:
        case SketchKind::svd_no_sigma:
            return {gather_columns(*spec.directions, distinct_indices(direction_count(spec), spec.tau, rng))};
        case SketchKind::fixed_direction: {
            const Vector& p = *spec.probabilities;
            std::discrete_distribution<Eigen::Index> pick(p.data(), p.data() + p.size());
            return {spec.directions->col(pick(rng))};
        }
    }
    throw Error("sketch: unhandled kind");
}

bool is_enumerable(const SketchSpec& spec) {
    if (spec.kind == SketchKind::identity) return true;
    if (spec.kind == SketchKind::gauss) return false;
    return spec.tau == 1;
}

std::vector<SketchOutcome> enumerate_outcomes(const SketchSpec& spec, std::size_t d) {
    spec.validate(d);
    if (spec.kind == SketchKind::gauss) throw Error("enumerate_outcomes: gauss sketches are continuous");
    if (!is_enumerable(spec)) throw Error("enumerate_outcomes: refusing tau > 1 discrete sketch");
    const auto n = static_cast<Eigen::Index>(d);
    std::vector<SketchOutcome> out;
    switch (spec.kind) {
        case SketchKind::identity:
            out.push_back({{Matrix::Identity(n, n)}, 1.0});
            break;
        case SketchKind::coord:
            for (Eigen::Index i = 0; i < n; ++i) {
                Matrix e = Matrix::Zero(n, 1);
                e(i, 0) = 1.0;
                out.push_back({{e}, 1.0 / static_cast<double>(d)});
            }
            break;
        case SketchKind::svd:
        case SketchKind::svd_no_sigma: {
            const auto r = spec.directions->cols();
            for (Eigen::Index i = 0; i < r; ++i)
                out.push_back({{spec.directions->col(i)}, 1.0 / static_cast<double>(r)});
            break;
        }
        case SketchKind::fixed_direction:
            for (Eigen::Index i = 0; i < spec.directions->cols(); ++i) {
                const double p = (*spec.probabilities)(i);
                if (p > 0.0) out.push_back({{spec.directions->col(i)}, p});
            }
            break;
        case SketchKind::gauss:
            break;
    }
    return out;
}

Matrix build_svd_directions(const Matrix& a, double tol, bool with_sigma) {
    const ReducedSvd svd = reduced_svd(a, tol);
    if (svd.rank() == 0) throw Error("build_svd_directions: data matrix has numerical rank 0");
    if (!with_sigma) return svd.u;
    return svd.u * svd.sigma.cwiseInverse().asDiagonal();
}

Vector fixed_direction_probabilities(const Matrix& directions, const Matrix& upper_bound) {
    if (upper_bound.rows() != upper_bound.cols() || upper_bound.rows() != directions.rows()) {
        throw DimensionMismatch("fixed_direction_probabilities: U must be d x d with d = rows of D");
    }
    Vector weights(directions.cols());
    for (Eigen::Index i = 0; i < directions.cols(); ++i)
        weights(i) = directions.col(i).dot(upper_bound * directions.col(i));
    const double total = weights.sum();
    if (!(total > 0.0) || (weights.array() < 0.0).any()) {
        throw Error("fixed_direction_probabilities: d_i^T U d_i must be nonnegative with a positive sum");
    }
    return weights / total;
}

SketchSpec make_fixed_direction_spec(const Matrix& directions, const Matrix& upper_bound) {
    SketchSpec spec;
    spec.kind = SketchKind::fixed_direction;
    spec.tau = 1;
    spec.directions = directions;
    spec.probabilities = fixed_direction_probabilities(directions, upper_bound);
    return spec;
}

}  // namespace rbfgs
