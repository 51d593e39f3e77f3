#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/dual_metric.hpp"
#include "imr/flat_system.hpp"
#include "imr/kron_quadratic.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace imr {

struct LambdaConfig {
    /// Target relative precision in (0, 1).
    double delta = 0.2;
    /// Stagnation lag.
    int p = 3;
    int max_rank = 100;
    /// Dimensions revisited after each correction; empty means all of them.
    std::vector<Index> update_dims;
    bool updates_enabled = true;
    int update_passes = 1;
    AlsConfig als;
    UpdateConfig update;

    void validate() const;
};

struct LambdaReport {
    double delta = 0.0;
    int p = 0;
    Index rank = 0;
    /// J(y_m) = |y_m - r|_Y^2 - |r|_Y^2 for m = 0, 1, ...
    std::vector<double> objective_history;
    /// e_m^p for every m where it was evaluated.
    std::vector<double> e_history;
    double achieved_e = 0.0;
    /// Heuristic stopping never certifies the precision.
    bool certified = false;
    bool precision_not_certified = false;
    bool regularized = false;
    std::uint64_t seed = 0;
    double y_norm = 0.0;
    /// Corrections computed, including the p look-ahead ones.
    Index corrections = 0;
    bool oracle = false;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const LambdaReport& r);

struct LambdaResult {
    CanonicalTensor y;
    LambdaReport report;
};

/// Approximation of r = R_Y^{-1} rhs, where rhs represents A u - b. The
/// target is never formed: the objective uses <r, y>_Y = <rhs, y>.
class ResidualProblem {
public:
    ResidualProblem(std::shared_ptr<const DualMetric> ry, CanonicalTensor rhs);

    const DualMetric& ry() const { return *ry_; }
    const CanonicalTensor& rhs() const { return quad_.rhs(); }
    const KronQuadratic& quadratic() const { return quad_; }
    /// |y - r|_Y^2 - |r|_Y^2
    double objective(const CanonicalTensor& y) const { return quad_.energy(y); }

private:
    std::shared_ptr<const DualMetric> ry_;
    KronQuadratic quad_;
};

/// Greedy rank-one approximation with dimension updates, stopped by the
/// stagnation test e_M^p <= delta; returns y_M.
LambdaResult lambda_delta(const ResidualProblem& rp, const LambdaConfig& cfg);

CanonicalTensor rank_one_correction(const ResidualProblem& rp, const CanonicalTensor& y_current, const AlsConfig& cfg);

CanonicalTensor dimension_update(const ResidualProblem& rp, const CanonicalTensor& y, Index mu,
                                 const UpdateConfig& cfg = {});

/// |y_m - y_{m+p}|_Y / |y_{m+p}|_Y; infinity for a zero denominator with a
/// nonzero numerator, 0 when both vanish.
double stagnation_estimate(const CanonicalTensor& y_m, const CanonicalTensor& y_mp, const DualMetric& ry);
/// Same on a history, comparing its first and last entries.
double stagnation_estimate(const std::vector<CanonicalTensor>& history, const DualMetric& ry);

/// Exact residual map built on a flat direct solve, for small problems. With
/// delta > 0 it returns a deliberately perturbed y with
/// |y - r|_Y = delta |r|_Y exactly and y orthogonal to y - r.
class OracleLambda {
public:
    OracleLambda(std::shared_ptr<const FlatSystem> sys, std::vector<Index> dims);

    /// Dense r = R_Y^{-1} rhs.
    Vector exact(const CanonicalTensor& rhs) const;
    LambdaResult operator()(const ResidualProblem& rp, double delta, std::uint64_t seed) const;

    const FlatSystem& system() const { return *sys_; }

private:
    std::shared_ptr<const FlatSystem> sys_;
    std::vector<Index> dims_;
};

}  // namespace imr
