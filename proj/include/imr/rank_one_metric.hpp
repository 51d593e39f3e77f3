#pragma once

#include "imr/factor_matrix.hpp"

#include <vector>

namespace imr {

class CanonicalTensor;

enum class MetricKind { identity = 0, diagonal = 1, general = 2 };

const char* to_string(MetricKind kind);

/// SPD Gram matrix of one dimension, with the factorization needed for solves
/// and square roots. Diagonal factors use entrywise square roots, general
/// ones the Cholesky factor L (G = L L^T).
class MetricFactor {
public:
    static MetricFactor identity(Index n);
    /// `gram_diagonal` holds the diagonal Gram entries (w_i^2 for weights w_i).
    static MetricFactor diagonal(const Vector& gram_diagonal);
    static MetricFactor general(const Matrix& gram);

    MetricKind kind() const { return kind_; }
    Index size() const { return n_; }

    Matrix apply(const Matrix& x) const;
    Matrix solve(const Matrix& x) const;
    /// Square-root factor transpose applied: L^T x (so |L^T x|^2 = x^T G x).
    Matrix sqrt_transpose_apply(const Matrix& x) const;
    /// Inverse of the above: L^{-T} x.
    Matrix sqrt_transpose_solve(const Matrix& x) const;

    Matrix gram() const;
    const Vector& diagonal_entries() const { return diag_; }

private:
    MetricKind kind_ = MetricKind::identity;
    Index n_ = 0;
    Vector diag_;
    Vector sqrt_diag_;
    Matrix gram_;
    Matrix chol_lower_;
};

/// Rank-one Kronecker inner product G_1 ⊗ ... ⊗ G_d.
class RankOneMetric {
public:
    RankOneMetric() = default;
    explicit RankOneMetric(std::vector<MetricFactor> factors);

    static RankOneMetric identity(const std::vector<Index>& dims);

    Index order() const { return static_cast<Index>(factors_.size()); }
    std::vector<Index> dims() const;
    MetricKind kind() const;
    const MetricFactor& factor(Index mu) const { return factors_[static_cast<std::size_t>(mu)]; }

    /// Applies G_mu to every factor (exact, rank preserved).
    CanonicalTensor apply(const CanonicalTensor& v) const;

    void check_compatible(const CanonicalTensor& v) const;

private:
    std::vector<MetricFactor> factors_;
};

/// Applies G_mu^{-1} to every factor of every term (the inverse Riesz map).
CanonicalTensor metric_solve(const RankOneMetric& m, const CanonicalTensor& v);

}  // namespace imr
