#pragma once

#include "imr/factor_matrix.hpp"

#include <functional>
#include <vector>

namespace imr {

/// Gauss-Legendre rule on [-1, 1] (weights sum to 2).
struct GaussRule {
    Vector nodes;
    Vector weights;
};

GaussRule gauss_legendre(int n);

/// Jacobi matrix of the orthonormal Legendre family: multiplication by t on
/// span{psi_0..psi_degree}, off-diagonal k / sqrt(4k^2 - 1).
Matrix legendre_jacobi(int degree);

/// psi_k(t), k = 0..degree, orthonormal for the uniform probability on
/// [-1, 1], by the three-term recurrence. Row i holds the values at t(i).
Matrix legendre_eval(int degree, const Vector& t);

/// Orthonormal polynomial basis for a uniform random variable on [lo, hi],
/// optionally piecewise over a partition (then one Legendre family per
/// piece, extended by zero). Functions are ordered piece-major.
class StochasticBasis {
public:
    static StochasticBasis legendre(double lo, double hi, int degree);
    static StochasticBasis piecewise_legendre(double lo, double hi, const std::vector<double>& breaks, int degree);

    Index size() const { return static_cast<Index>(pieces_.size() - 1) * (degree_ + 1); }
    int degree() const { return degree_; }
    double lo() const { return pieces_.front(); }
    double hi() const { return pieces_.back(); }

    /// Basis values at xi, one row per point.
    Matrix eval(const Vector& xi) const;
    /// E[g(xi) psi_j psi_l] by Gauss quadrature with `points` nodes per piece.
    Matrix multiplication(const std::function<double(double)>& g, int points) const;
    /// E[xi psi_j psi_l], exact from the Jacobi matrices.
    Matrix multiplication_by_variable() const;
    /// E[psi_j psi_l], by quadrature (identity up to round-off).
    Matrix gram() const;
    /// E[psi_j].
    Vector mean() const;

private:
    std::vector<double> pieces_;
    int degree_ = 0;
};

}  // namespace imr
