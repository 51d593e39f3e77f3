#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/dual_metric.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace imr {

struct AlsConfig {
    int max_sweeps = 30;
    /// Relative change of the rank-one tensor over a sweep.
    double stagnation_tol = 1e-8;
    std::uint64_t seed = 0;
};

struct UpdateConfig {
    /// Systems up to this many unknowns are factorized densely.
    double dense_limit = 1500;
    /// Above this the update is skipped.
    double solve_guard = 2e5;
    double pcg_tol = 1e-12;
    int pcg_max_iter = 2000;
};

struct QuadSolveInfo {
    int sweeps = 0;
    bool regularized = false;
    bool skipped = false;
    int pcg_iterations = 0;
    std::string warning;
};

/// J(y) = <Q y, y> - 2 <f, y> with Q = sum_t ⊗_mu Q_t^mu symmetric positive
/// definite and f a canonical tensor. Its minimizer is Q^{-1} f, which is
/// never formed. Every low-rank solve of the library (dual residuals, the
/// normal equations of the canonical residual, metric projections) is an
/// instance of this problem.
class KronQuadratic {
public:
    KronQuadratic(std::vector<QuadTerm> q, CanonicalTensor f);

    Index order() const { return f_.order(); }
    std::vector<Index> dims() const { return f_.dims(); }
    const CanonicalTensor& rhs() const { return f_; }
    const std::vector<QuadTerm>& terms() const { return q_; }

    double q_inner(const CanonicalTensor& y, const CanonicalTensor& z) const { return quad_inner(q_, y, z); }
    double energy(const CanonicalTensor& y) const;

    /// Rank-one w approximately minimizing J(y + w), by alternating
    /// minimization over the factors of w.
    CanonicalTensor rank_one_correction(const CanonicalTensor& y, const AlsConfig& cfg,
                                        QuadSolveInfo* info = nullptr) const;

    /// Replaces every dimension-mu factor of y at once by minimizing J over
    /// them; the other factors stay fixed. Never increases J.
    CanonicalTensor dimension_update(const CanonicalTensor& y, Index mu, const UpdateConfig& cfg,
                                     QuadSolveInfo* info = nullptr) const;

private:
    std::vector<QuadTerm> q_;
    CanonicalTensor f_;
};

}  // namespace imr
