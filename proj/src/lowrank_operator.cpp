#include "imr/lowrank_operator.hpp"

#include "imr/error.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <string>

namespace imr {

LowRankOperator::LowRankOperator(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw DimensionMismatch("operator needs at least one term");
    order_ = static_cast<Index>(terms_.front().size());
    if (order_ < 2) throw DimensionMismatch("operator order must be >= 2");
    for (const auto& f : terms_.front()) {
        row_dims_.push_back(f.rows());
        col_dims_.push_back(f.cols());
    }
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        const auto& term = terms_[t];
        if (static_cast<Index>(term.size()) != order_) {
            throw DimensionMismatch("operator term " + std::to_string(t) + " has the wrong order");
        }
        for (Index mu = 0; mu < order_; ++mu) {
            const auto& f = term[static_cast<std::size_t>(mu)];
            if (f.rows() != row_dims_[static_cast<std::size_t>(mu)] ||
                f.cols() != col_dims_[static_cast<std::size_t>(mu)]) {
                throw DimensionMismatch("operator term " + std::to_string(t) + " dimension " +
                                        std::to_string(mu) + " has inconsistent shape");
            }
        }
    }
}

LowRankOperator LowRankOperator::identity(const std::vector<Index>& dims) {
    Term t;
    for (Index n : dims) t.push_back(FactorMatrix::identity(n));
    return LowRankOperator({std::move(t)});
}

namespace {

void check_cols(const LowRankOperator& a, const CanonicalTensor& v) {
    if (v.order() != a.order()) throw DimensionMismatch("operator/tensor order mismatch");
    for (Index mu = 0; mu < a.order(); ++mu) {
        if (v.dim(mu) != a.col_dims()[static_cast<std::size_t>(mu)]) {
            throw DimensionMismatch("operator/tensor dimension " + std::to_string(mu) + " mismatch");
        }
    }
}

void check_rows(const LowRankOperator& a, const CanonicalTensor& v) {
    if (v.order() != a.order()) throw DimensionMismatch("operator/tensor order mismatch");
    for (Index mu = 0; mu < a.order(); ++mu) {
        if (v.dim(mu) != a.row_dims()[static_cast<std::size_t>(mu)]) {
            throw DimensionMismatch("adjoint/tensor dimension " + std::to_string(mu) + " mismatch");
        }
    }
}

template <bool Transposed>
CanonicalTensor apply_impl(const LowRankOperator& a, const CanonicalTensor& v) {
    const Index r = v.rank();
    const Index ra = a.rank();
    std::vector<Matrix> out;
    for (Index mu = 0; mu < a.order(); ++mu) {
        const Index rows = Transposed ? a.col_dims()[static_cast<std::size_t>(mu)]
                                      : a.row_dims()[static_cast<std::size_t>(mu)];
        Matrix f(rows, ra * r);
        for (Index i = 0; i < ra; ++i) {
            const FactorMatrix& fm = a.factor(i, mu);
            f.middleCols(i * r, r) = Transposed ? fm.apply_transpose(v.factor(mu)) : fm.apply(v.factor(mu));
        }
        out.push_back(std::move(f));
    }
    return CanonicalTensor(std::move(out));
}

}  // namespace

CanonicalTensor op_apply(const LowRankOperator& a, const CanonicalTensor& v) {
    check_cols(a, v);
    return apply_impl<false>(a, v);
}

CanonicalTensor op_apply_adjoint(const LowRankOperator& a, const CanonicalTensor& v) {
    check_rows(a, v);
    return apply_impl<true>(a, v);
}

LowRankOperator op_adjoint(const LowRankOperator& a) {
    std::vector<LowRankOperator::Term> terms;
    for (const auto& t : a.terms()) {
        LowRankOperator::Term tt;
        for (const auto& f : t) tt.push_back(f.transpose());
        terms.push_back(std::move(tt));
    }
    return LowRankOperator(std::move(terms));
}

SparseMatrix op_to_sparse(const LowRankOperator& a, double guard) {
    double rows = 1.0;
    double cols = 1.0;
    for (Index mu = 0; mu < a.order(); ++mu) {
        rows *= static_cast<double>(a.row_dims()[static_cast<std::size_t>(mu)]);
        cols *= static_cast<double>(a.col_dims()[static_cast<std::size_t>(mu)]);
    }
    if (std::max(rows, cols) > guard) {
        throw GuardExceeded("flattened operator size " + std::to_string(std::max(rows, cols)) +
                            " exceeds the guard");
    }
    SparseMatrix sum(static_cast<Index>(rows), static_cast<Index>(cols));
    for (const auto& t : a.terms()) {
        SparseMatrix k = t.front().sparse();
        for (std::size_t mu = 1; mu < t.size(); ++mu) {
            SparseMatrix next = Eigen::kroneckerProduct(t[mu].sparse(), k);
            k = std::move(next);
        }
        sum += k;
    }
    sum.makeCompressed();
    return sum;
}

}  // namespace imr
