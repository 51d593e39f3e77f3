#include "imr/lambda_delta.hpp"

#include "imr/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace imr {

void LambdaConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("lambda: delta must lie in (0, 1)");
    if (p < 1) throw ConfigError("lambda: stagnation lag p must be >= 1");
    if (max_rank < 1) throw ConfigError("lambda: max_rank must be >= 1");
    if (update_passes < 0) throw ConfigError("lambda: update_passes must be >= 0");
}

nlohmann::json to_json(const LambdaReport& r) {
    return {
        {"delta", r.delta},
        {"p", r.p},
        {"rank", r.rank},
        {"corrections", r.corrections},
        {"objective_history", r.objective_history},
        {"e_history", r.e_history},
        {"achieved_e", r.achieved_e},
        {"certified", r.certified},
        {"precision_not_certified", r.precision_not_certified},
        {"regularized", r.regularized},
        {"seed", r.seed},
        {"y_norm", r.y_norm},
        {"oracle", r.oracle},
        {"warnings", r.warnings},
    };
}

ResidualProblem::ResidualProblem(std::shared_ptr<const DualMetric> ry, CanonicalTensor rhs)
    : ry_(std::move(ry)), quad_(ry_->quadratic_terms(), std::move(rhs)) {}

CanonicalTensor rank_one_correction(const ResidualProblem& rp, const CanonicalTensor& y_current,
                                    const AlsConfig& cfg) {
    return rp.quadratic().rank_one_correction(y_current, cfg);
}

CanonicalTensor dimension_update(const ResidualProblem& rp, const CanonicalTensor& y, Index mu,
                                 const UpdateConfig& cfg) {
    return rp.quadratic().dimension_update(y, mu, cfg);
}

double stagnation_estimate(const CanonicalTensor& y_m, const CanonicalTensor& y_mp, const DualMetric& ry) {
    const double num = ry.norm(ct_sub(y_m, y_mp));
    const double den = ry.norm(y_mp);
    if (den > 0.0) return num / den;
    return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

double stagnation_estimate(const std::vector<CanonicalTensor>& history, const DualMetric& ry) {
    if (history.size() < 2) throw DimensionMismatch("stagnation estimate needs two iterates");
    return stagnation_estimate(history.front(), history.back(), ry);
}

namespace {

void add_warning(LambdaReport& r, const std::string& w) {
    if (!w.empty() && std::find(r.warnings.begin(), r.warnings.end(), w) == r.warnings.end()) {
        r.warnings.push_back(w);
    }
}

}  // namespace

LambdaResult lambda_delta(const ResidualProblem& rp, const LambdaConfig& cfg) {
    cfg.validate();
    LambdaResult out;
    LambdaReport& rep = out.report;
    rep.delta = cfg.delta;
    rep.p = cfg.p;
    rep.seed = cfg.als.seed;
    const auto dims = rp.rhs().dims();
    CanonicalTensor y = CanonicalTensor::zero(dims);
    rep.objective_history.push_back(0.0);
    if (rp.rhs().rank() == 0 || ct_norm(rp.rhs()) == 0.0) {
        out.y = y;
        return out;
    }

    std::vector<Index> update_dims = cfg.update_dims;
    if (update_dims.empty()) {
        for (Index mu = 0; mu < static_cast<Index>(dims.size()); ++mu) update_dims.push_back(mu);
    }

    std::deque<CanonicalTensor> ring{y};
    // On max_rank exhaustion the iterate with the lowest objective is kept.
    CanonicalTensor best = y;
    double best_obj = 0.0;
    for (int m = 1; m <= cfg.max_rank; ++m) {
        AlsConfig als = cfg.als;
        als.seed = cfg.als.seed + static_cast<std::uint64_t>(m);
        QuadSolveInfo info;
        const CanonicalTensor w = rp.quadratic().rank_one_correction(y, als, &info);
        rep.regularized = rep.regularized || info.regularized;
        y = ct_add(y, w);
        if (cfg.updates_enabled) {
            for (int pass = 0; pass < cfg.update_passes; ++pass) {
                for (Index mu : update_dims) {
                    QuadSolveInfo uinfo;
                    y = rp.quadratic().dimension_update(y, mu, cfg.update, &uinfo);
                    rep.regularized = rep.regularized || uinfo.regularized;
                    add_warning(rep, uinfo.warning);
                }
            }
        }
        const double obj = rp.objective(y);
        rep.objective_history.push_back(obj);
        rep.corrections = m;
        if (obj < best_obj) {
            best_obj = obj;
            best = y;
        }
        ring.push_back(y);
        if (static_cast<int>(ring.size()) > cfg.p + 1) ring.pop_front();
        if (static_cast<int>(ring.size()) == cfg.p + 1) {
            const double e = stagnation_estimate(ring.front(), ring.back(), rp.ry());
            rep.e_history.push_back(e);
            if (e <= cfg.delta) {
                out.y = ring.front();
                rep.achieved_e = e;
                rep.rank = out.y.rank();
                rep.y_norm = rp.ry().norm(out.y);
                return out;
            }
        }
    }
    rep.precision_not_certified = true;
    rep.achieved_e = rep.e_history.empty() ? std::numeric_limits<double>::infinity() : rep.e_history.back();
    add_warning(rep, "max_rank reached before the stagnation test passed");
    out.y = best;
    rep.rank = out.y.rank();
    rep.y_norm = rp.ry().norm(out.y);
    return out;
}

OracleLambda::OracleLambda(std::shared_ptr<const FlatSystem> sys, std::vector<Index> dims)
    : sys_(std::move(sys)), dims_(std::move(dims)) {}

Vector OracleLambda::exact(const CanonicalTensor& rhs) const { return sys_->dual_solve(ct_to_dense(rhs)); }

LambdaResult OracleLambda::operator()(const ResidualProblem& rp, double delta, std::uint64_t seed) const {
    if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("oracle lambda: delta must lie in [0, 1)");
    LambdaResult out;
    out.report.delta = delta;
    out.report.seed = seed;
    out.report.oracle = true;
    out.report.certified = true;
    const Vector f = ct_to_dense(rp.rhs());
    const Vector r = sys_->dual_solve(f);
    // |r|_Y^2 = <R_Y r, r> = <f, r>
    const double rr = std::max(f.dot(r), 0.0);
    const SparseMatrix& a = sys_->matrix();
    auto ry_apply = [&](const Vector& v) -> Vector { return a * sys_->metric_solve(a.transpose() * v); };
    Vector y = r;
    if (delta > 0.0 && rr > 0.0) {
        std::mt19937_64 gen(seed);
        std::normal_distribution<double> normal;
        Vector z(r.size());
        for (Index i = 0; i < z.size(); ++i) z(i) = normal(gen);
        // Y-orthogonalize against r; <z, r>_Y = <z, f>.
        z -= (z.dot(f) / rr) * r;
        const double zz = z.dot(ry_apply(z));
        if (!(zz > 0.0)) throw NumericalFailure("oracle lambda: degenerate perturbation direction");
        z /= std::sqrt(zz);
        y = (1.0 - delta * delta) * r + delta * std::sqrt(1.0 - delta * delta) * std::sqrt(rr) * z;
    }
    out.y = ct_from_dense(dims_, y);
    out.report.rank = out.y.rank();
    const double yy = y.dot(ry_apply(y));
    out.report.y_norm = std::sqrt(std::max(yy, 0.0));
    return out;
}

}  // namespace imr
