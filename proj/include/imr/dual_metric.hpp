#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/lowrank_operator.hpp"
#include "imr/rank_one_metric.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace imr {

/// One Kronecker term of a symmetric quadratic form, factors shared so that
/// several forms can reuse the same blocks.
using SharedFactor = std::shared_ptr<const FactorMatrix>;
using QuadTerm = std::vector<SharedFactor>;

enum class DualMode { implicit, materialized };

const char* to_string(DualMode mode);

/// The ideal dual metric R_Y = A R_X^{-1} A^T.
///
/// The per-dimension blocks A_i^mu G_mu^{-1} (A_j^mu)^T are always built,
/// they feed the reduced systems of the residual solver. `mode` only picks
/// how whole tensors are mapped by apply(): through the r_A^2 block terms
/// (materialized) or as A(R_X^{-1}(A^T y)) (implicit). The default is
/// materialized for identity or diagonal R_X, implicit otherwise.
class DualMetric {
public:
    DualMetric(LowRankOperator a, RankOneMetric rx, std::optional<DualMode> mode = std::nullopt);

    const LowRankOperator& op() const { return a_; }
    const RankOneMetric& rx() const { return rx_; }
    DualMode mode() const { return mode_; }
    Index order() const { return a_.order(); }
    const std::vector<Index>& dims() const { return a_.row_dims(); }

    /// Term (i, j) of the materialized form, i and j over operator terms.
    const QuadTerm& block(Index i, Index j) const;
    const std::vector<QuadTerm>& quadratic_terms() const { return blocks_; }

    CanonicalTensor apply(const CanonicalTensor& y) const;
    /// <R_Y y, z>, evaluated blockwise without forming R_Y y.
    double inner(const CanonicalTensor& y, const CanonicalTensor& z) const;
    double norm(const CanonicalTensor& y) const;

private:
    LowRankOperator a_;
    RankOneMetric rx_;
    DualMode mode_;
    std::vector<QuadTerm> blocks_;
};

/// Sum over terms of prod_mu y^mu^T Q_t^mu z^mu (all term pairs).
double quad_inner(const std::vector<QuadTerm>& terms, const CanonicalTensor& y, const CanonicalTensor& z);

}  // namespace imr
