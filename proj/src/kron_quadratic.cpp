#include "imr/kron_quadratic.hpp"

#include "imr/error.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <random>
#include <string>

namespace imr {

namespace {

// Cholesky solve with one jittered retry: 1e-12 * trace / n on the diagonal.
class SpdSolver {
public:
    explicit SpdSolver(Matrix m) : dense_(true) {
        m = 0.5 * (m + m.transpose()).eval();
        llt_.compute(m);
        if (llt_.info() != Eigen::Success) {
            const double jitter = 1e-12 * std::abs(m.trace()) / static_cast<double>(std::max<Index>(m.rows(), 1));
            m.diagonal().array() += jitter;
            llt_.compute(m);
            regularized_ = true;
            if (llt_.info() != Eigen::Success) throw NumericalFailure("reduced system is not positive definite");
        }
    }

    explicit SpdSolver(SparseMatrix m) : dense_(false) {
        SparseMatrix sym = 0.5 * (m + SparseMatrix(m.transpose()));
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(sym);
        if (ldlt_->info() != Eigen::Success || (ldlt_->vectorD().array() <= 0.0).any()) {
            double tr = 0.0;
            for (Index i = 0; i < sym.rows(); ++i) tr += sym.coeff(i, i);
            SparseMatrix id(sym.rows(), sym.cols());
            id.setIdentity();
            sym += (1e-12 * std::abs(tr) / static_cast<double>(std::max<Index>(sym.rows(), 1))) * id;
            ldlt_->compute(sym);
            regularized_ = true;
            if (ldlt_->info() != Eigen::Success || (ldlt_->vectorD().array() <= 0.0).any()) {
                throw NumericalFailure("reduced system is not positive definite");
            }
        }
    }

    Matrix solve(const Matrix& b) const {
        if (dense_) return llt_.solve(b);
        return ldlt_->solve(b);
    }

    bool regularized() const { return regularized_; }

private:
    bool dense_;
    bool regularized_ = false;
    Eigen::LLT<Matrix> llt_;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

// sum_t c_t Q_t^mu, sparse when every factor is.
SpdSolver assemble_and_factor(const std::vector<QuadTerm>& q, Index mu, const std::vector<double>& c) {
    const auto m = static_cast<std::size_t>(mu);
    bool all_sparse = true;
    for (const auto& t : q) all_sparse = all_sparse && t[m]->is_sparse();
    const Index n = q.front()[m]->rows();
    if (all_sparse) {
        SparseMatrix sum(n, n);
        for (std::size_t t = 0; t < q.size(); ++t) {
            if (c[t] != 0.0) sum += c[t] * (*q[t][m]->sparse_ptr());
        }
        return SpdSolver(std::move(sum));
    }
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t t = 0; t < q.size(); ++t) {
        if (c[t] == 0.0) continue;
        if (const auto* s = q[t][m]->sparse_ptr()) {
            sum += c[t] * Matrix(*s);
        } else {
            sum += c[t] * (*q[t][m]->dense_ptr());
        }
    }
    return SpdSolver(std::move(sum));
}

double frob_dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

KronQuadratic::KronQuadratic(std::vector<QuadTerm> q, CanonicalTensor f) : q_(std::move(q)), f_(std::move(f)) {
    if (q_.empty()) throw DimensionMismatch("quadratic form needs at least one term");
    for (const auto& t : q_) {
        if (static_cast<Index>(t.size()) != f_.order()) throw DimensionMismatch("quadratic term order mismatch");
        for (Index mu = 0; mu < f_.order(); ++mu) {
            const auto& fm = t[static_cast<std::size_t>(mu)];
            if (fm->rows() != f_.dim(mu) || fm->cols() != f_.dim(mu)) {
                throw DimensionMismatch("quadratic term shape mismatch in dimension " + std::to_string(mu));
            }
        }
    }
}

double KronQuadratic::energy(const CanonicalTensor& y) const { return q_inner(y, y) - 2.0 * ct_dot(f_, y); }

CanonicalTensor KronQuadratic::rank_one_correction(const CanonicalTensor& y, const AlsConfig& cfg,
                                                   QuadSolveInfo* info) const {
    const Index d = order();
    const std::size_t nt = q_.size();
    if (y.order() != d) throw DimensionMismatch("rank-one correction: order mismatch");

    // Q_t^nu y^nu stays fixed during the whole alternating minimization.
    std::vector<std::vector<Matrix>> qy(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        for (Index nu = 0; nu < d; ++nu) qy[t].push_back(q_[t][static_cast<std::size_t>(nu)]->apply(y.factor(nu)));
    }

    std::vector<Vector> w;
    std::mt19937_64 gen(cfg.seed);
    std::normal_distribution<double> normal;
    for (Index nu = 0; nu < d; ++nu) {
        Vector v(f_.dim(nu));
        for (Index i = 0; i < v.size(); ++i) v(i) = normal(gen);
        w.push_back(v / v.norm());
    }
    auto zero_correction = [&]() {
        std::vector<Vector> z;
        for (Index nu = 0; nu < d; ++nu) z.push_back(Vector::Zero(f_.dim(nu)));
        return CanonicalTensor::rank_one(z);
    };

    QuadSolveInfo local;
    CanonicalTensor previous = CanonicalTensor::rank_one(w);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        for (Index mu = 0; mu < d; ++mu) {
            for (Index nu = 0; nu < d; ++nu) {
                if (nu == mu) continue;
                const double nrm = w[static_cast<std::size_t>(nu)].norm();
                if (nrm > 0) w[static_cast<std::size_t>(nu)] /= nrm;
            }
            std::vector<double> c(nt, 1.0);
            Vector rhs = Vector::Zero(f_.dim(mu));
            // Right-hand side: contraction of f, minus that of Q y.
            Vector a = Vector::Ones(f_.rank());
            for (Index nu = 0; nu < d; ++nu) {
                if (nu == mu) continue;
                a.array() *= (f_.factor(nu).transpose() * w[static_cast<std::size_t>(nu)]).array();
            }
            rhs += f_.factor(mu) * a;
            for (std::size_t t = 0; t < nt; ++t) {
                Vector bt = Vector::Ones(y.rank());
                for (Index nu = 0; nu < d; ++nu) {
                    if (nu == mu) continue;
                    const Vector& wn = w[static_cast<std::size_t>(nu)];
                    c[t] *= wn.dot(q_[t][static_cast<std::size_t>(nu)]->apply(wn).col(0));
                    bt.array() *= (qy[t][static_cast<std::size_t>(nu)].transpose() * wn).array();
                }
                if (y.rank() > 0) rhs -= qy[t][static_cast<std::size_t>(mu)] * bt;
            }
            if (!(rhs.norm() > 0.0)) {
                if (info) *info = local;
                return zero_correction();
            }
            const SpdSolver solver = assemble_and_factor(q_, mu, c);
            local.regularized = local.regularized || solver.regularized();
            w[static_cast<std::size_t>(mu)] = solver.solve(rhs).col(0);
        }
        local.sweeps = sweep + 1;
        CanonicalTensor current = CanonicalTensor::rank_one(w);
        const double nrm = ct_norm(current);
        const double change = ct_norm(ct_sub(current, previous));
        previous = std::move(current);
        if (!(nrm > 0.0) || change <= cfg.stagnation_tol * nrm) break;
    }
    if (info) *info = local;
    return previous;
}

CanonicalTensor KronQuadratic::dimension_update(const CanonicalTensor& y, Index mu, const UpdateConfig& cfg,
                                                QuadSolveInfo* info) const {
    QuadSolveInfo local;
    const Index d = order();
    const Index m = y.rank();
    if (y.order() != d) throw DimensionMismatch("dimension update: order mismatch");
    if (mu < 0 || mu >= d) throw DimensionMismatch("dimension update: invalid dimension");
    if (m == 0) {
        if (info) *info = local;
        return y;
    }
    const Index n = f_.dim(mu);
    const double size = static_cast<double>(m) * static_cast<double>(n);
    if (size > cfg.solve_guard) {
        local.skipped = true;
        local.warning = "dimension " + std::to_string(mu) + " update skipped: " + std::to_string(m * n) +
                        " unknowns exceed the solve guard";
        if (info) *info = local;
        return y;
    }
    const std::size_t nt = q_.size();
    const auto smu = static_cast<std::size_t>(mu);

    std::vector<Matrix> ct(nt, Matrix::Ones(m, m));
    for (std::size_t t = 0; t < nt; ++t) {
        for (Index nu = 0; nu < d; ++nu) {
            if (nu == mu) continue;
            ct[t].array() *= (y.factor(nu).transpose() * q_[t][static_cast<std::size_t>(nu)]->apply(y.factor(nu))).array();
        }
    }
    Matrix wf = Matrix::Ones(m, f_.rank());
    for (Index nu = 0; nu < d; ++nu) {
        if (nu == mu) continue;
        wf.array() *= (y.factor(nu).transpose() * f_.factor(nu)).array();
    }
    const Matrix rhs = f_.factor(mu) * wf.transpose();

    Matrix v;
    if (size <= cfg.dense_limit) {
        Matrix k = Matrix::Zero(m * n, m * n);
        for (std::size_t t = 0; t < nt; ++t) {
            const Matrix qt = q_[t][smu]->dense();
            for (Index kk = 0; kk < m; ++kk) {
                for (Index l = 0; l < m; ++l) {
                    if (ct[t](kk, l) != 0.0) k.block(kk * n, l * n, n, n) += ct[t](kk, l) * qt;
                }
            }
        }
        const SpdSolver solver(std::move(k));
        local.regularized = solver.regularized();
        const Vector x = solver.solve(Eigen::Map<const Vector>(rhs.data(), m * n)).col(0);
        v = Eigen::Map<const Matrix>(x.data(), n, m);
    } else {
        // Block-Jacobi preconditioned CG on K V = F, K V = sum_t Q_t V C_t^T,
        // started from the current factors.
        auto apply_k = [&](const Matrix& x) {
            Matrix out = Matrix::Zero(n, m);
            for (std::size_t t = 0; t < nt; ++t) out += q_[t][smu]->apply(x * ct[t].transpose());
            return out;
        };
        std::vector<SpdSolver> blocks;
        blocks.reserve(static_cast<std::size_t>(m));
        for (Index kk = 0; kk < m; ++kk) {
            std::vector<double> c(nt);
            for (std::size_t t = 0; t < nt; ++t) c[t] = ct[t](kk, kk);
            blocks.push_back(assemble_and_factor(q_, mu, c));
            local.regularized = local.regularized || blocks.back().regularized();
        }
        auto precondition = [&](const Matrix& r) {
            Matrix z(n, m);
            for (Index kk = 0; kk < m; ++kk) z.col(kk) = blocks[static_cast<std::size_t>(kk)].solve(r.col(kk)).col(0);
            return z;
        };
        v = y.factor(mu);
        Matrix r = rhs - apply_k(v);
        const double rhs_norm = rhs.norm();
        Matrix z = precondition(r);
        Matrix p = z;
        double rz = frob_dot(r, z);
        int it = 0;
        for (; it < cfg.pcg_max_iter && r.norm() > cfg.pcg_tol * rhs_norm; ++it) {
            const Matrix kp = apply_k(p);
            const double pkp = frob_dot(p, kp);
            if (!(pkp > 0.0)) break;
            const double alpha = rz / pkp;
            v += alpha * p;
            r -= alpha * kp;
            z = precondition(r);
            const double rz_new = frob_dot(r, z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        local.pcg_iterations = it;
        if (r.norm() > 1e-6 * rhs_norm) {
            local.warning = "dimension " + std::to_string(mu) + " update: iterative solve stopped at relative residual " +
                            std::to_string(r.norm() / rhs_norm);
        }
    }
    if (!v.allFinite()) throw NumericalFailure("dimension update produced non-finite factors");

    CanonicalTensor out = y;
    out.factor(mu) = v;
    // Exact solves cannot increase J; keep the old iterate if round-off did.
    const double before = energy(y);
    const double after = energy(out);
    if (after > before + 1e-12 * std::abs(before)) {
        if (info) *info = local;
        return y;
    }
    if (info) *info = local;
    return out;
}

}  // namespace imr
