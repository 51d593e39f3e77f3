#pragma once

// Independent dense oracles for the unit tests. They evaluate tensors and
// operators entry by entry from the factors and never call the library's own
// densification or Kronecker code.

#include "imr/canonical_tensor.hpp"
#include "imr/lowrank_operator.hpp"

#include <Eigen/Eigenvalues>

#include <vector>

namespace oracle {

using imr::Index;
using imr::Matrix;
using imr::Vector;

inline std::vector<Index> multi_index(Index flat, const std::vector<Index>& dims) {
    std::vector<Index> idx(dims.size());
    for (std::size_t mu = 0; mu < dims.size(); ++mu) {
        idx[mu] = flat % dims[mu];
        flat /= dims[mu];
    }
    return idx;
}

inline Index total(const std::vector<Index>& dims) {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
}

/// Entry-by-entry expansion, first index fastest.
inline Vector dense(const imr::CanonicalTensor& t) {
    const auto dims = t.dims();
    Vector out = Vector::Zero(total(dims));
    for (Index k = 0; k < out.size(); ++k) {
        const auto idx = multi_index(k, dims);
        double s = 0.0;
        for (Index i = 0; i < t.rank(); ++i) {
            double p = 1.0;
            for (Index mu = 0; mu < t.order(); ++mu) p *= t.factor(mu)(idx[static_cast<std::size_t>(mu)], i);
            s += p;
        }
        out(k) = s;
    }
    return out;
}

/// Full operator matrix from products of factor entries.
inline Matrix dense(const imr::LowRankOperator& a) {
    const auto& rd = a.row_dims();
    const auto& cd = a.col_dims();
    Matrix m = Matrix::Zero(total(rd), total(cd));
    for (Index t = 0; t < a.rank(); ++t) {
        std::vector<Matrix> f;
        for (Index mu = 0; mu < a.order(); ++mu) f.push_back(a.factor(t, mu).dense());
        for (Index r = 0; r < m.rows(); ++r) {
            const auto ri = multi_index(r, rd);
            for (Index c = 0; c < m.cols(); ++c) {
                const auto ci = multi_index(c, cd);
                double p = 1.0;
                for (std::size_t mu = 0; mu < f.size() && p != 0.0; ++mu) p *= f[mu](ri[mu], ci[mu]);
                m(r, c) += p;
            }
        }
    }
    return m;
}

/// Flattened Gram of a rank-one metric given its factor Grams.
inline Matrix dense_metric(const std::vector<Matrix>& grams) {
    std::vector<Index> dims;
    for (const auto& g : grams) dims.push_back(g.rows());
    const Index n = total(dims);
    Matrix m(n, n);
    for (Index r = 0; r < n; ++r) {
        const auto ri = multi_index(r, dims);
        for (Index c = 0; c < n; ++c) {
            const auto ci = multi_index(c, dims);
            double p = 1.0;
            for (std::size_t mu = 0; mu < grams.size(); ++mu) p *= grams[mu](ri[mu], ci[mu]);
            m(r, c) = p;
        }
    }
    return m;
}

/// Best rank-r approximation of m in the norm |W1^{1/2} X W2^{1/2}|_F for
/// diagonal weights, via the eigen-decomposition of the weighted Gram matrix.
inline Matrix weighted_best(const Matrix& m, const Vector& w1, const Vector& w2, Index r) {
    const Vector s1 = w1.cwiseSqrt(), s2 = w2.cwiseSqrt();
    const Matrix b = s1.asDiagonal() * m * s2.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(b * b.transpose());
    const Matrix u = es.eigenvectors().rightCols(r);
    return s1.cwiseInverse().asDiagonal() * (u * u.transpose() * b) * s2.cwiseInverse().asDiagonal();
}

/// Singular values of W1^{1/2} m W2^{1/2}, descending.
inline Vector weighted_singular_values(const Matrix& m, const Vector& w1, const Vector& w2) {
    const Matrix b = w1.cwiseSqrt().asDiagonal() * m * w2.cwiseSqrt().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(b.transpose() * b);
    return es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace oracle
