#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/flat_system.hpp"
#include "imr/lambda_delta.hpp"
#include "imr/problem.hpp"
#include "imr/projection.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace imr {

struct SolverConfig {
    /// Precision of the residual approximation; 0 selects exact residuals.
    double delta = 0.2;
    /// Step size. Only the exact-residual reference honors rho != 1.
    double rho = 1.0;
    int max_outer = 100;
    FormatSpec projector;
    LambdaConfig lambda;
    ProjectionConfig projection;
    /// Stop once eps_hat^k / eps_hat^0 falls below this.
    double stop_tol = 1e-12;
    /// Stop when every relative change of eps_hat over the window is below this.
    double stagnation_tol = 1e-4;
    int stagnation_window = 5;
    /// Stop as diverged when eps_hat grows by this factor over the window.
    double divergence_factor = 10.0;
    int divergence_window = 5;
    std::uint64_t seed = 0;
    /// When set, residuals come from this flat oracle instead of the greedy map.
    std::shared_ptr<const OracleLambda> oracle;
    /// When set, true errors and effectivities are recorded.
    std::shared_ptr<const ReferenceSolution> reference;
    /// Pre-projection ranks above this raise a warning.
    Index rank_warning = 500;

    void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One record per iterate u^k, including the returned one.
struct IterationRecord {
    int k = 0;
    Index rank_u = 0;
    Index rank_y = 0;
    double y_norm = 0.0;
    double eps_hat = 0.0;
    double true_err = kNaN;
    double tau_hat = kNaN;
    /// |y^k - r^k|_Y / |r^k|_Y measured with the oracle.
    double delta_eff = kNaN;
    bool lambda_certified = false;
    double seconds = 0.0;
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    /// Geometric mean of eps_hat^{k+1} / eps_hat^k over the linear phase.
    double rate_estimated = kNaN;
    /// Oracle runs: geometric mean of (e_{k+1} - e_*) / e_k over the linear
    /// phase, e_* the best-approximation error. Bounded by (1 + eta) delta.
    double rate = kNaN;
    /// Oracle runs: e_K / e_* - 1.
    double gamma_tilde = kNaN;
    double best_error = kNaN;
    std::string stop_reason;
    std::vector<std::string> warnings;
    double seconds = 0.0;
};

struct SolveResult {
    CanonicalTensor u;
    IterationTrace trace;
};

/// eps_hat = |y|_Y / sqrt(1 - delta^2).
double error_estimator(double ynorm, double delta);

/// Perturbed gradient iteration u^{k+1} = P(u^k - R_X^{-1} A^T y^k) with
/// y^k an approximation of the dual residual, from u^0 = 0.
SolveResult gradient_solve(const Problem& problem, const SolverConfig& cfg);

/// Same iteration with exact residuals from a flat solve and step size rho.
/// With rho = 1 one step reaches the projection of the exact solution.
SolveResult ideal_reference_solve(const Problem& problem, const FormatSpec& spec, SolverConfig cfg);

/// Fills rate, gamma_tilde and rate_estimated from the records.
void summarize_trace(IterationTrace& trace);

void write_trace_csv(std::ostream& os, const IterationTrace& trace);
nlohmann::json trace_to_json(const IterationTrace& trace);

}  // namespace imr
