#include "imr/factor_matrix.hpp"

#include "imr/error.hpp"

namespace imr {

namespace {

double fill_of(Index nnz, Index rows, Index cols) {
    const double total = static_cast<double>(rows) * static_cast<double>(cols);
    return total > 0 ? static_cast<double>(nnz) / total : 0.0;
}

}  // namespace

FactorMatrix FactorMatrix::from_dense(const Matrix& m) {
    FactorMatrix f;
    const Index nnz = (m.array() != 0.0).count();
    if (fill_of(nnz, m.rows(), m.cols()) <= kDenseFillThreshold) {
        f.storage_ = SparseMatrix(m.sparseView());
    } else {
        f.storage_ = m;
    }
    return f;
}

FactorMatrix FactorMatrix::from_sparse(SparseMatrix m) {
    m.makeCompressed();
    m.prune(0.0);
    FactorMatrix f;
    if (fill_of(m.nonZeros(), m.rows(), m.cols()) <= kDenseFillThreshold) {
        f.storage_ = std::move(m);
    } else {
        f.storage_ = Matrix(m);
    }
    return f;
}

FactorMatrix FactorMatrix::identity(Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return from_sparse(std::move(id));
}

Index FactorMatrix::rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

Index FactorMatrix::cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, storage_);
}

Index FactorMatrix::nonzeros() const {
    if (const auto* s = sparse_ptr()) return s->nonZeros();
    return (std::get<Matrix>(storage_).array() != 0.0).count();
}

Matrix FactorMatrix::dense() const {
    if (const auto* s = sparse_ptr()) return Matrix(*s);
    return std::get<Matrix>(storage_);
}

SparseMatrix FactorMatrix::sparse() const {
    if (const auto* s = sparse_ptr()) return *s;
    return std::get<Matrix>(storage_).sparseView();
}

Matrix FactorMatrix::apply(const Matrix& x) const {
    if (x.rows() != cols()) throw DimensionMismatch("factor apply: inner dimensions differ");
    return std::visit([&](const auto& m) -> Matrix { return m * x; }, storage_);
}

Matrix FactorMatrix::apply_transpose(const Matrix& x) const {
    if (x.rows() != rows()) throw DimensionMismatch("factor transpose apply: inner dimensions differ");
    return std::visit([&](const auto& m) -> Matrix { return m.transpose() * x; }, storage_);
}

FactorMatrix FactorMatrix::transpose() const {
    FactorMatrix f;
    if (const auto* s = sparse_ptr()) {
        f.storage_ = SparseMatrix(s->transpose());
    } else {
        f.storage_ = Matrix(std::get<Matrix>(storage_).transpose());
    }
    return f;
}

FactorMatrix FactorMatrix::linear_combination(const std::vector<const FactorMatrix*>& terms,
                                              const std::vector<double>& coeffs) {
    if (terms.empty() || terms.size() != coeffs.size()) {
        throw DimensionMismatch("linear_combination: empty or mismatched term list");
    }
    const Index r = terms.front()->rows();
    const Index c = terms.front()->cols();
    bool all_sparse = true;
    for (const auto* t : terms) {
        if (t->rows() != r || t->cols() != c) throw DimensionMismatch("linear_combination: shapes differ");
        all_sparse = all_sparse && t->is_sparse();
    }
    if (all_sparse) {
        SparseMatrix acc(r, c);
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (coeffs[i] != 0.0) acc += coeffs[i] * *terms[i]->sparse_ptr();
        }
        return from_sparse(std::move(acc));
    }
    Matrix acc = Matrix::Zero(r, c);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (coeffs[i] == 0.0) continue;
        if (const auto* s = terms[i]->sparse_ptr()) {
            acc += coeffs[i] * Matrix(*s);
        } else {
            acc += coeffs[i] * *terms[i]->dense_ptr();
        }
    }
    FactorMatrix f;
    f.storage_ = std::move(acc);
    return f;
}

FactorMatrix FactorMatrix::product(const FactorMatrix& a, const FactorMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("factor product: inner dimensions differ");
    if (a.is_sparse() && b.is_sparse()) {
        SparseMatrix p = (*a.sparse_ptr()) * (*b.sparse_ptr());
        return from_sparse(std::move(p));
    }
    return from_dense(a.apply(b.dense()));
}

bool FactorMatrix::operator==(const FactorMatrix& other) const {
    if (rows() != other.rows() || cols() != other.cols()) return false;
    return dense() == other.dense();
}

}  // namespace imr
