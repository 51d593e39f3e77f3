#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/dual_metric.hpp"
#include "imr/lowrank_operator.hpp"
#include "imr/problem.hpp"
#include "imr/rank_one_metric.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>

namespace imr {

/// Default unknown count above which direct flat solves are refused.
inline constexpr double kFlatSolveGuard = 2e5;

/// Flattened (full-size) view of an operator and a metric, factorized with
/// sparse direct solvers. Oracle and reference facility, not a solver path.
class FlatSystem {
public:
    FlatSystem(const LowRankOperator& a, const RankOneMetric& rx, double guard = kFlatSolveGuard);

    Index size() const { return a_.rows(); }
    const SparseMatrix& matrix() const { return a_; }
    const SparseMatrix& metric() const { return g_; }

    /// A^{-1} f
    Vector solve(const Vector& f) const;
    /// A^{-T} f
    Vector solve_adjoint(const Vector& f) const;
    Vector metric_apply(const Vector& v) const { return g_ * v; }
    Vector metric_solve(const Vector& v) const;
    /// R_Y^{-1} f for the ideal metric R_Y = A G^{-1} A^T, i.e. A^{-T} G A^{-1} f.
    Vector dual_solve(const Vector& f) const;

    double x_inner(const Vector& a, const Vector& b) const { return a.dot(g_ * b); }
    double x_norm(const Vector& v) const;

private:
    SparseMatrix a_;
    SparseMatrix g_;
    Eigen::SparseLU<SparseMatrix> lu_;
    Eigen::SparseLU<SparseMatrix> lu_t_;
    Eigen::SimplicialLDLT<SparseMatrix> g_chol_;
};

/// Flattened Kronecker product of the metric factors.
SparseMatrix metric_to_sparse(const RankOneMetric& m);

/// Dense reference solution with error helpers.
class ReferenceSolution {
public:
    explicit ReferenceSolution(const Problem& p, double guard = kFlatSolveGuard);

    const FlatSystem& system() const { return *sys_; }
    const std::vector<Index>& dims() const { return dims_; }
    const Vector& u() const { return u_; }
    const Vector& b() const { return b_; }
    /// Exact canonical form of u (order 2: the solution matrix).
    CanonicalTensor u_tensor() const;
    double u_norm() const { return u_norm_; }
    /// |A u - b|_2 / |b|_2
    double relative_residual() const;

    /// |u - v|_X
    double error(const CanonicalTensor& v) const;
    /// Order 2 only: best rank-r approximation of u in R_X and its error.
    CanonicalTensor best_approximation(Index r) const;
    double best_error(Index r) const;

private:
    std::shared_ptr<FlatSystem> sys_;
    std::vector<Index> dims_;
    RankOneMetric rx_;
    Vector u_;
    Vector b_;
    double u_norm_ = 0.0;
};

struct SpectralBounds {
    double alpha = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    bool dense = true;
};

/// Extreme generalized singular values of A from (X, R_X) to (Y', R_Y^{-1})
/// with R_Y a rank-one metric. Dense eigensolve up to a few thousand
/// unknowns, power and inverse iteration above.
SpectralBounds spectral_bounds(const LowRankOperator& a, const RankOneMetric& rx, const RankOneMetric& ry,
                               int iters = 500, double guard = 2e4);
/// Same with the ideal R_Y = A R_X^{-1} A^T.
SpectralBounds spectral_bounds_ideal(const LowRankOperator& a, const RankOneMetric& rx, int iters = 500,
                                     double guard = 2e4);

}  // namespace imr
