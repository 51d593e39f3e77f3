#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/factor_matrix.hpp"

#include <vector>

namespace imr {

/// Sum over terms of Kronecker products ⊗_mu A_i^mu. Term i, dimension mu
/// maps R^{col_dims[mu]} to R^{row_dims[mu]}.
class LowRankOperator {
public:
    using Term = std::vector<FactorMatrix>;

    LowRankOperator() = default;
    explicit LowRankOperator(std::vector<Term> terms);

    static LowRankOperator identity(const std::vector<Index>& dims);

    Index order() const { return order_; }
    Index rank() const { return static_cast<Index>(terms_.size()); }
    const std::vector<Index>& row_dims() const { return row_dims_; }
    const std::vector<Index>& col_dims() const { return col_dims_; }
    const std::vector<Term>& terms() const { return terms_; }
    const FactorMatrix& factor(Index term, Index mu) const {
        return terms_[static_cast<std::size_t>(term)][static_cast<std::size_t>(mu)];
    }

private:
    Index order_ = 0;
    std::vector<Index> row_dims_;
    std::vector<Index> col_dims_;
    std::vector<Term> terms_;
};

/// A v, exact: rank r_A * rank(v), operator terms outermost.
CanonicalTensor op_apply(const LowRankOperator& a, const CanonicalTensor& v);
/// A^T (each factor transposed).
LowRankOperator op_adjoint(const LowRankOperator& a);
/// A^T v without forming the adjoint.
CanonicalTensor op_apply_adjoint(const LowRankOperator& a, const CanonicalTensor& v);

/// Flattened operator sum_i kron(A_i^d, ..., A_i^1), matching the
/// first-index-fastest layout of ct_to_dense.
SparseMatrix op_to_sparse(const LowRankOperator& a, double guard = 2e5);

}  // namespace imr
