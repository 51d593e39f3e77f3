#include "imr/cmr.hpp"

#include "imr/error.hpp"

#include <chrono>
#include <cmath>

namespace imr {

KronQuadratic cmr_quadratic(const Problem& problem) {
    const LowRankOperator& a = problem.a;
    const Index ra = a.rank();
    std::vector<QuadTerm> q;
    for (Index i = 0; i < ra; ++i) {
        for (Index j = 0; j < ra; ++j) {
            QuadTerm t;
            for (Index mu = 0; mu < a.order(); ++mu) {
                t.push_back(std::make_shared<const FactorMatrix>(
                    FactorMatrix::product(a.factor(i, mu).transpose(), a.factor(j, mu))));
            }
            q.push_back(std::move(t));
        }
    }
    return KronQuadratic(std::move(q), op_apply_adjoint(a, problem.b));
}

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

SolveResult cmr_solve(const Problem& problem, const FormatSpec& spec, const CmrConfig& cfg) {
    problem.validate();
    if (spec.target_rank < 0) throw ConfigError("cmr: target rank must be >= 0");
    const auto t0 = Clock::now();
    const KronQuadratic quad = cmr_quadratic(problem);
    const double bb = ct_dot(problem.b, problem.b);

    SolveResult out;
    auto record = [&](int k, const CanonicalTensor& u) {
        IterationRecord rec;
        rec.k = k;
        rec.rank_u = u.rank();
        // |A u - b|^2 = J(u) + |b|^2
        rec.y_norm = std::sqrt(std::max(quad.energy(u) + bb, 0.0));
        rec.eps_hat = rec.y_norm;
        if (cfg.reference) rec.true_err = cfg.reference->error(u);
        rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        out.trace.records.push_back(rec);
    };

    CanonicalTensor u = CanonicalTensor::zero(problem.dims());
    record(0, u);
    for (Index i = 0; i < spec.target_rank; ++i) {
        AlsConfig als = cfg.als;
        als.seed = cfg.als.seed + static_cast<std::uint64_t>(i) + 1;
        QuadSolveInfo info;
        u = ct_add(u, quad.rank_one_correction(u, als, &info));
        if (info.regularized) out.trace.warnings.push_back("regularized reduced system at correction " + std::to_string(i + 1));
        if (cfg.mode == CmrMode::greedy) {
            for (int pass = 0; pass < cfg.update_passes; ++pass) {
                for (Index mu = 0; mu < u.order(); ++mu) u = quad.dimension_update(u, mu, cfg.update);
            }
            record(static_cast<int>(i) + 1, u);
        }
    }
    if (cfg.mode == CmrMode::direct && spec.target_rank > 1) {
        double prev = quad.energy(u);
        for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
            for (Index mu = 0; mu < u.order(); ++mu) {
                QuadSolveInfo info;
                u = quad.dimension_update(u, mu, cfg.update, &info);
                if (!info.warning.empty()) out.trace.warnings.push_back(info.warning);
            }
            const double cur = quad.energy(u);
            const double e_prev = std::max(prev + bb, 0.0);
            const double e_cur = std::max(cur + bb, 0.0);
            prev = cur;
            record(sweep + 1, u);
            if (e_prev - e_cur <= cfg.tol * std::max(e_prev, 1e-300)) break;
        }
    } else if (cfg.mode == CmrMode::direct) {
        record(1, u);
    }
    out.u = u;
    out.trace.stop_reason = cfg.mode == CmrMode::greedy ? "rank_reached" : "sweeps";
    out.trace.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

}  // namespace imr
