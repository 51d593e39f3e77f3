#include "imr/dual_metric.hpp"

#include "imr/error.hpp"

#include <algorithm>
#include <cmath>

namespace imr {

const char* to_string(DualMode mode) {
    return mode == DualMode::implicit ? "implicit" : "materialized";
}

namespace {

FactorMatrix triple_product(const FactorMatrix& ai, const MetricFactor& g, const FactorMatrix& aj) {
    if (g.kind() != MetricKind::general && ai.is_sparse() && aj.is_sparse()) {
        SparseMatrix left = *ai.sparse_ptr();
        if (g.kind() == MetricKind::diagonal) {
            left = left * g.diagonal_entries().cwiseInverse().asDiagonal();
        }
        SparseMatrix prod = left * aj.sparse_ptr()->transpose();
        return FactorMatrix::from_sparse(std::move(prod));
    }
    // G^{-1} A_j^T, then A_i on the left.
    const Matrix right = g.solve(aj.dense().transpose());
    return FactorMatrix::from_dense(ai.apply(right));
}

}  // namespace

DualMetric::DualMetric(LowRankOperator a, RankOneMetric rx, std::optional<DualMode> mode)
    : a_(std::move(a)), rx_(std::move(rx)) {
    if (rx_.order() != a_.order()) throw DimensionMismatch("dual metric: operator/metric order mismatch");
    for (Index mu = 0; mu < a_.order(); ++mu) {
        if (rx_.factor(mu).size() != a_.col_dims()[static_cast<std::size_t>(mu)]) {
            throw DimensionMismatch("dual metric: metric does not match operator columns");
        }
    }
    mode_ = mode.value_or(rx_.kind() == MetricKind::general ? DualMode::implicit : DualMode::materialized);
    const Index ra = a_.rank();
    blocks_.resize(static_cast<std::size_t>(ra * ra));
    for (Index i = 0; i < ra; ++i) {
        for (Index j = 0; j < ra; ++j) {
            QuadTerm& t = blocks_[static_cast<std::size_t>(i * ra + j)];
            for (Index mu = 0; mu < a_.order(); ++mu) {
                if (j < i) {
                    // B_ij = B_ji^T
                    const auto& mirror = blocks_[static_cast<std::size_t>(j * ra + i)][static_cast<std::size_t>(mu)];
                    t.push_back(std::make_shared<const FactorMatrix>(mirror->transpose()));
                } else {
                    t.push_back(std::make_shared<const FactorMatrix>(
                        triple_product(a_.factor(i, mu), rx_.factor(mu), a_.factor(j, mu))));
                }
            }
        }
    }
}

const QuadTerm& DualMetric::block(Index i, Index j) const {
    return blocks_[static_cast<std::size_t>(i * a_.rank() + j)];
}

CanonicalTensor DualMetric::apply(const CanonicalTensor& y) const {
    if (mode_ == DualMode::implicit) {
        return op_apply(a_, metric_solve(rx_, op_apply_adjoint(a_, y)));
    }
    std::vector<Matrix> out;
    const Index r = y.rank();
    for (Index mu = 0; mu < order(); ++mu) {
        if (y.dim(mu) != dims()[static_cast<std::size_t>(mu)]) throw DimensionMismatch("dual apply: shape mismatch");
        Matrix f(y.dim(mu), static_cast<Index>(blocks_.size()) * r);
        for (std::size_t t = 0; t < blocks_.size(); ++t) {
            f.middleCols(static_cast<Index>(t) * r, r) = blocks_[t][static_cast<std::size_t>(mu)]->apply(y.factor(mu));
        }
        out.push_back(std::move(f));
    }
    return CanonicalTensor(std::move(out));
}

double quad_inner(const std::vector<QuadTerm>& terms, const CanonicalTensor& y, const CanonicalTensor& z) {
    if (y.order() != z.order()) throw DimensionMismatch("quadratic inner: order mismatch");
    double total = 0.0;
    for (const auto& t : terms) {
        Matrix prod = Matrix::Ones(y.rank(), z.rank());
        for (Index mu = 0; mu < y.order(); ++mu) {
            prod.array() *= (y.factor(mu).transpose() * t[static_cast<std::size_t>(mu)]->apply(z.factor(mu))).array();
        }
        total += prod.sum();
    }
    return total;
}

double DualMetric::inner(const CanonicalTensor& y, const CanonicalTensor& z) const {
    return quad_inner(blocks_, y, z);
}

double DualMetric::norm(const CanonicalTensor& y) const {
    // R_Y is SPD; a negative value can only be round-off on a tiny norm.
    return std::sqrt(std::max(inner(y, y), 0.0));
}

}  // namespace imr
