#pragma once

#include "imr/factor_matrix.hpp"
#include "imr/problem.hpp"

#include <array>
#include <functional>

namespace imr {

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<std::array<double, 2>(double, double)>;

/// Bilinear (Q1) elements on a uniform n x n grid of the unit square with
/// homogeneous Dirichlet conditions. Interior node (i, j), i, j = 1..n-1, has
/// index (i - 1) + (n - 1)(j - 1). Integrals use a 3x3 Gauss rule per element.
class Q1Space {
public:
    explicit Q1Space(int n);

    int elements_per_side() const { return n_; }
    double h() const { return 1.0 / n_; }
    Index size() const { return static_cast<Index>(n_ - 1) * (n_ - 1); }
    Vector node_x() const;
    Vector node_y() const;

    /// int kappa grad phi_i . grad phi_k
    SparseMatrix stiffness(const ScalarField& kappa = nullptr) const;
    /// int c . grad phi_k phi_i (row i, column k)
    SparseMatrix advection(const VectorField& c) const;
    /// int phi_i phi_k; `all_nodes` keeps boundary nodes (index i + (n+1) j).
    SparseMatrix mass(bool all_nodes = false) const;
    /// Exact int_box phi_i.
    Vector box_integral(const Box& box) const;

private:
    int n_;
};

}  // namespace imr
