#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <variant>
#include <vector>

namespace imr {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Fill fraction above which a factor is stored densely.
inline constexpr double kDenseFillThreshold = 0.25;

/// One Kronecker factor of an operator term. Stored sparse or dense
/// depending on its fill; both layouts expose the same products.
class FactorMatrix {
public:
    FactorMatrix() = default;

    /// Chooses the storage from the fill of `m`.
    static FactorMatrix from_dense(const Matrix& m);
    static FactorMatrix from_sparse(SparseMatrix m);
    static FactorMatrix identity(Index n);

    Index rows() const;
    Index cols() const;
    bool is_sparse() const { return std::holds_alternative<SparseMatrix>(storage_); }
    Index nonzeros() const;

    Matrix dense() const;
    SparseMatrix sparse() const;
    const SparseMatrix* sparse_ptr() const { return std::get_if<SparseMatrix>(&storage_); }
    const Matrix* dense_ptr() const { return std::get_if<Matrix>(&storage_); }

    /// this * x
    Matrix apply(const Matrix& x) const;
    /// this^T * x
    Matrix apply_transpose(const Matrix& x) const;

    FactorMatrix transpose() const;

    /// Sum of scaled factors; sparse when every operand is sparse and the
    /// result stays below the fill threshold.
    static FactorMatrix linear_combination(const std::vector<const FactorMatrix*>& terms,
                                           const std::vector<double>& coeffs);

    /// a * b, storage picked from the fill of the product.
    static FactorMatrix product(const FactorMatrix& a, const FactorMatrix& b);

    bool operator==(const FactorMatrix& other) const;

private:
    std::variant<Matrix, SparseMatrix> storage_{Matrix{}};
};

}  // namespace imr
