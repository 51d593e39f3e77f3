#pragma once

#include "imr/factor_matrix.hpp"

#include <cstdint>
#include <vector>

namespace imr {

class RankOneMetric;

/// Rank-r canonical tensor: sum over i of the elementary tensors
/// v_i^1 ⊗ ... ⊗ v_i^d. Factor mu is an n_mu x r matrix whose column i is
/// v_i^mu. Rank zero (n_mu x 0 factors) is the zero tensor.
class CanonicalTensor {
public:
    CanonicalTensor() = default;

    /// Validates shapes (order >= 2, common column count, finite entries).
    explicit CanonicalTensor(std::vector<Matrix> factors);

    static CanonicalTensor zero(const std::vector<Index>& dims);
    static CanonicalTensor rank_one(const std::vector<Vector>& vectors);

    Index order() const { return static_cast<Index>(factors_.size()); }
    Index rank() const { return factors_.empty() ? 0 : factors_.front().cols(); }
    Index dim(Index mu) const { return factors_[static_cast<std::size_t>(mu)].rows(); }
    std::vector<Index> dims() const;
    /// Product of the dimension sizes (as a double, it may not fit an integer).
    double full_size() const;

    const Matrix& factor(Index mu) const { return factors_[static_cast<std::size_t>(mu)]; }
    Matrix& factor(Index mu) { return factors_[static_cast<std::size_t>(mu)]; }
    const std::vector<Matrix>& factors() const { return factors_; }

    /// Rank-one tensor holding term i.
    CanonicalTensor term(Index i) const;
    /// Terms [first, first + count).
    CanonicalTensor terms(Index first, Index count) const;

    bool is_finite() const;

private:
    std::vector<Matrix> factors_;
};

/// Exact sum by factor concatenation; rank(a) + rank(b).
CanonicalTensor ct_add(const CanonicalTensor& a, const CanonicalTensor& b);
/// Exact difference a - b.
CanonicalTensor ct_sub(const CanonicalTensor& a, const CanonicalTensor& b);
/// Scales the first factor of every term.
CanonicalTensor ct_scale(const CanonicalTensor& a, double s);

/// Euclidean (identity metric) inner product.
double ct_dot(const CanonicalTensor& a, const CanonicalTensor& b);
/// Induced inner product under a rank-one metric.
double ct_inner(const CanonicalTensor& a, const CanonicalTensor& b, const RankOneMetric& m);
double ct_norm(const CanonicalTensor& a, const RankOneMetric& m);
double ct_norm(const CanonicalTensor& a);

/// Default entry limit for densification.
inline constexpr double kDefaultDenseGuard = 1e7;

/// Full expansion, first index fastest (column-major generalization).
Vector ct_to_dense(const CanonicalTensor& a, double guard = kDefaultDenseGuard);
/// Order-2 expansion as an n_1 x n_2 matrix.
Matrix ct_to_matrix(const CanonicalTensor& a);
/// Order-2 tensor from a matrix: columns paired with unit vectors (exact).
CanonicalTensor ct_from_matrix(const Matrix& m);

/// Exact canonical form of a full array (first index fastest): factor 0 is
/// the mode-1 unfolding, the others are unit vectors. Rank is the product
/// of dims 2..d, so this is meant for small oracle tensors.
CanonicalTensor ct_from_dense(const std::vector<Index>& dims, const Vector& data);

/// Per-dimension Gram contraction a^mu^T b^mu for every mu, combined by
/// Hadamard product: entry (i, j) is the product over mu.
Matrix ct_term_products(const CanonicalTensor& a, const CanonicalTensor& b);

/// Seeded random tensor with standard normal factor entries.
CanonicalTensor ct_random(const std::vector<Index>& dims, Index rank, std::uint64_t seed);

}  // namespace imr
