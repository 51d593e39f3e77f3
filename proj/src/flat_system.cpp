#include "imr/flat_system.hpp"

#include "imr/error.hpp"
#include "imr/svd2d.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace imr {

SparseMatrix metric_to_sparse(const RankOneMetric& m) {
    SparseMatrix k;
    for (Index mu = 0; mu < m.order(); ++mu) {
        SparseMatrix g = m.factor(mu).gram().sparseView();
        if (mu == 0) {
            k = g;
        } else {
            SparseMatrix next = Eigen::kroneckerProduct(g, k);
            k = std::move(next);
        }
    }
    k.makeCompressed();
    return k;
}

FlatSystem::FlatSystem(const LowRankOperator& a, const RankOneMetric& rx, double guard)
    : a_(op_to_sparse(a, guard)), g_(metric_to_sparse(rx)) {
    if (a_.rows() != a_.cols()) throw DimensionMismatch("flat system needs a square operator");
    if (g_.rows() != a_.cols()) throw DimensionMismatch("flat system: metric size mismatch");
    lu_.compute(a_);
    if (lu_.info() != Eigen::Success) throw NumericalFailure("flat system: LU factorization failed");
    SparseMatrix at = a_.transpose();
    lu_t_.compute(at);
    if (lu_t_.info() != Eigen::Success) throw NumericalFailure("flat system: adjoint LU factorization failed");
    g_chol_.compute(g_);
    if (g_chol_.info() != Eigen::Success) throw NumericalFailure("flat system: metric factorization failed");
}

Vector FlatSystem::solve(const Vector& f) const { return lu_.solve(f); }

Vector FlatSystem::solve_adjoint(const Vector& f) const { return lu_t_.solve(f); }

Vector FlatSystem::metric_solve(const Vector& v) const { return g_chol_.solve(v); }

Vector FlatSystem::dual_solve(const Vector& f) const { return solve_adjoint(g_ * solve(f)); }

double FlatSystem::x_norm(const Vector& v) const { return std::sqrt(std::max(x_inner(v, v), 0.0)); }

ReferenceSolution::ReferenceSolution(const Problem& p, double guard)
    : sys_(std::make_shared<FlatSystem>(p.a, p.rx, guard)), dims_(p.dims()), rx_(p.rx) {
    b_ = ct_to_dense(p.b);
    u_ = sys_->solve(b_);
    u_norm_ = sys_->x_norm(u_);
}

CanonicalTensor ReferenceSolution::u_tensor() const { return ct_from_dense(dims_, u_); }

double ReferenceSolution::relative_residual() const {
    const double nb = b_.norm();
    return nb > 0 ? (sys_->matrix() * u_ - b_).norm() / nb : (sys_->matrix() * u_).norm();
}

double ReferenceSolution::error(const CanonicalTensor& v) const {
    return sys_->x_norm(u_ - ct_to_dense(v));
}

CanonicalTensor ReferenceSolution::best_approximation(Index r) const {
    if (dims_.size() != 2) throw DimensionMismatch("best approximation oracle is order-2 only");
    return svd2d_project(u_tensor(), r, rx_);
}

double ReferenceSolution::best_error(Index r) const { return error(best_approximation(r)); }

namespace {

using Apply = std::function<Vector(const Vector&)>;

// Generalized eigenvalue extremes of M x = lambda G x, where M = A^T Y^{-1} A.
SpectralBounds bounds_impl(const FlatSystem& sys, const Apply& y_solve, const Apply& y_apply, int iters,
                           double guard) {
    const Index n = sys.size();
    if (static_cast<double>(n) > guard) {
        throw GuardExceeded("spectral_bounds: " + std::to_string(n) + " unknowns exceed the guard");
    }
    const SparseMatrix& a = sys.matrix();
    SpectralBounds out;
    if (n <= 2500) {
        const Matrix ad(a);
        Matrix yinv_a(n, n);
        for (Index j = 0; j < n; ++j) yinv_a.col(j) = y_solve(ad.col(j));
        Matrix m = ad.transpose() * yinv_a;
        m = 0.5 * (m + m.transpose()).eval();
        const Matrix g(sys.metric());
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(m, g, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw NumericalFailure("spectral_bounds: eigensolver failed");
        out.alpha = std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
        out.beta = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
        out.dense = true;
    } else {
        auto m_apply = [&](const Vector& x) -> Vector { return a.transpose() * y_solve(a * x); };
        // M^{-1} = A^{-1} Y A^{-T}
        auto m_solve = [&](const Vector& x) -> Vector { return sys.solve(y_apply(sys.solve_adjoint(x))); };
        std::mt19937_64 gen(12345);
        std::normal_distribution<double> normal;
        Vector x0(n);
        for (Index i = 0; i < n; ++i) x0(i) = normal(gen);
        auto rayleigh = [&](const Vector& x) { return x.dot(m_apply(x)) / sys.x_inner(x, x); };

        Vector x = x0;
        double lmax = 0.0;
        for (int it = 0; it < iters; ++it) {
            x = sys.metric_solve(m_apply(x));
            x /= sys.x_norm(x);
            const double l = rayleigh(x);
            if (it > 5 && std::abs(l - lmax) <= 1e-12 * std::abs(l)) {
                lmax = l;
                break;
            }
            lmax = l;
        }
        x = x0;
        double lmin = 0.0;
        for (int it = 0; it < iters; ++it) {
            x = m_solve(sys.metric_apply(x));
            x /= sys.x_norm(x);
            const double l = rayleigh(x);
            if (it > 5 && std::abs(l - lmin) <= 1e-12 * std::abs(l)) {
                lmin = l;
                break;
            }
            lmin = l;
        }
        out.alpha = std::sqrt(std::max(lmin, 0.0));
        out.beta = std::sqrt(std::max(lmax, 0.0));
        out.dense = false;
    }
    out.kappa = out.alpha > 0 ? out.beta / out.alpha : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace

SpectralBounds spectral_bounds(const LowRankOperator& a, const RankOneMetric& rx, const RankOneMetric& ry,
                               int iters, double guard) {
    FlatSystem sys(a, rx, guard);
    const SparseMatrix gy = metric_to_sparse(ry);
    if (gy.rows() != sys.size()) throw DimensionMismatch("spectral_bounds: R_Y size mismatch");
    Eigen::SimplicialLDLT<SparseMatrix> chol(gy);
    if (chol.info() != Eigen::Success) throw NumericalFailure("spectral_bounds: R_Y factorization failed");
    return bounds_impl(
        sys, [&](const Vector& v) -> Vector { return chol.solve(v); },
        [&](const Vector& v) -> Vector { return gy * v; }, iters, guard);
}

SpectralBounds spectral_bounds_ideal(const LowRankOperator& a, const RankOneMetric& rx, int iters, double guard) {
    FlatSystem sys(a, rx, guard);
    const SparseMatrix& am = sys.matrix();
    return bounds_impl(
        sys, [&](const Vector& v) -> Vector { return sys.dual_solve(v); },
        [&](const Vector& v) -> Vector { return am * sys.metric_solve(am.transpose() * v); }, iters, guard);
}

}  // namespace imr
