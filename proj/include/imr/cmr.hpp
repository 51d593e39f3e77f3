#pragma once

#include "imr/gradient.hpp"
#include "imr/kron_quadratic.hpp"
#include "imr/problem.hpp"
#include "imr/projection.hpp"

#include <memory>

namespace imr {

enum class CmrMode { greedy, direct };

struct CmrConfig {
    CmrMode mode = CmrMode::greedy;
    AlsConfig als;
    UpdateConfig update;
    /// Greedy: dimension-update passes after each correction (0 = pure greedy).
    int update_passes = 0;
    /// Direct: cyclic update sweeps after the greedy start.
    int max_sweeps = 30;
    double tol = 1e-10;
    std::shared_ptr<const ReferenceSolution> reference;
};

/// Normal-equation form of min |A v - b|_2: Q = A^T A, f = A^T b.
KronQuadratic cmr_quadratic(const Problem& problem);

/// Canonical minimal residual baseline over R_r. The trace holds one record
/// per rank (greedy) or per sweep (direct); eps_hat is the canonical
/// residual norm |A u - b|_2.
SolveResult cmr_solve(const Problem& problem, const FormatSpec& spec, const CmrConfig& cfg);

}  // namespace imr
