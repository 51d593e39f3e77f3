#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/flat_system.hpp"
#include "imr/gradient.hpp"
#include "imr/problem.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace imr {

struct GreedySchedule {
    int r_max = 20;
    /// Per-step residual precision; the last entry repeats.
    std::vector<double> delta_m{0.2};
    /// Constant of the computable convergence condition, in (0, 1).
    double epsilon = 0.1;
    /// Stop once the estimated relative error falls below this.
    double stop_tol = 1e-2;
    /// Consecutive condition failures that end the loop; 0 never stops.
    int max_condition_failures = 0;
    /// Recompute a correction once with halved delta when the condition fails.
    bool adaptive_retry = true;

    double delta_at(int m) const;
    /// 2 delta / (1 - 2 delta) inflated by 1e-3; infinite for delta >= 1/2.
    double gamma_at(int m) const;
    void validate() const;
};

struct GreedyStep {
    int m = 0;
    double delta = 0.0;
    double gamma = 0.0;
    /// eps_hat before (f_{m-1}) and after (f_m) the correction.
    double est_err_before = 0.0;
    double est_err = 0.0;
    double alpha_tilde = 0.0;
    double kappa = kNaN;
    bool mu_lb_ok = false;
    bool condition_ok = false;
    bool retried = false;
    Index rank_y_max = 0;
    int inner_iterations = 0;
    double seconds = 0.0;
    // Oracle fields, NaN without a reference.
    double f_norm_before = kNaN;
    double f_norm = kNaN;
    double alpha_true = kNaN;
    double alpha_tilde_true = kNaN;
    double kappa_true = kNaN;
};

struct GreedyDiagnostics {
    std::vector<GreedyStep> steps;
    /// converged | r_max | stalled | condition_failed
    std::string status;
    double seconds = 0.0;
};

struct GreedyResult {
    CanonicalTensor u;
    /// The corrections w~_1, ..., w~_m in order.
    std::vector<CanonicalTensor> corrections;
    GreedyDiagnostics diagnostics;
};

/// alpha~^2 <= (1 - eps) / ((1 + gamma)^2 - eps)
bool greedy_condition_check(double alpha_tilde, double gamma, double epsilon);

/// Weak greedy loop u_m = u_{m-1} + w~_m, each correction a rank-one
/// gradient solve on the updated right-hand side b - A u_{m-1}. `inner`
/// configures those solves (delta is overridden per step, the rank forced
/// to 1); its reference, when present, fills the oracle fields.
GreedyResult weak_greedy_solve(const Problem& problem, const GreedySchedule& sched, const SolverConfig& inner);

struct AuditStep {
    int m = 0;
    double f_prev_norm = 0.0;
    double f_norm = 0.0;
    double w_tilde_norm = 0.0;
    double w_opt_norm = 0.0;
    double kappa = 0.0;
    double mu = 0.0;
    double gamma_used = 0.0;
    /// Which gamma fed mu: the scheduled one, or alpha~/alpha - 1 when the
    /// correction is not (1 + gamma)-quasi-optimal.
    bool gamma_effective = false;
    double energy_defect = 0.0;
    double telescoping_defect = 0.0;
    bool ok = true;
    std::string failure;
};

struct AuditReport {
    std::vector<AuditStep> steps;
    bool ok = true;
    std::string failure;
};

/// Checks the energy identity, the kappa sandwich with the exact rank-one
/// optimum, mu/2 <= kappa and telescoping, for order-2 problems.
AuditReport greedy_identities_audit(const ReferenceSolution& ref, const RankOneMetric& rx,
                                    const std::vector<CanonicalTensor>& corrections,
                                    const std::vector<double>& gammas, double rel_tol = 1e-9);

void write_diagnostics_csv(std::ostream& os, const GreedyDiagnostics& diag);
nlohmann::json diagnostics_to_json(const GreedyDiagnostics& diag, const GreedySchedule& sched);
nlohmann::json audit_to_json(const AuditReport& report);

}  // namespace imr
