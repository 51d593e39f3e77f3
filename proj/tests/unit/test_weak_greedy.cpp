#include "oracles.hpp"

#include "imr/error.hpp"
#include "imr/greedy.hpp"
#include "imr/problems.hpp"
#include "imr/svd2d.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace imr;

namespace {

const Problem& small_rad2d() {
    static const Problem p = build_rad2d(6).problem;
    return p;
}

SolverConfig oracle_inner(const Problem& p, int max_outer) {
    SolverConfig cfg;
    cfg.max_outer = max_outer;
    cfg.reference = std::make_shared<const ReferenceSolution>(p);
    cfg.oracle = std::make_shared<const OracleLambda>(
        std::shared_ptr<const FlatSystem>(cfg.reference, &cfg.reference->system()), p.dims());
    return cfg;
}

// Well conditioned 8 x 7 operator 4 I ⊗ I + S1 ⊗ S2.
Problem matrix_problem() {
    auto sym = [](Index n, std::uint64_t seed) {
        const Matrix g = ct_random({n, n}, n, seed).factor(0);
        const Matrix s = g + g.transpose();
        return Matrix(s / s.operatorNorm());
    };
    Problem p;
    p.a = LowRankOperator({{FactorMatrix::from_dense(4.0 * Matrix::Identity(8, 8)), FactorMatrix::identity(7)},
                           {FactorMatrix::from_dense(sym(8, 50)), FactorMatrix::from_dense(sym(7, 51))}});
    p.b = ct_random({8, 7}, 7, 52);
    p.rx = RankOneMetric::identity({8, 7});
    return p;
}

// Greedy sequence of exact rank-one best approximations of the error, each
// scaled by `scale`.
std::vector<CanonicalTensor> scripted_corrections(const ReferenceSolution& ref, const RankOneMetric& rx, int steps,
                                                  double scale) {
    std::vector<CanonicalTensor> out;
    Vector f = ref.u();
    for (int m = 0; m < steps; ++m) {
        const auto w = ct_scale(svd2d_project(ct_from_dense(ref.dims(), f), 1, rx), scale);
        f -= ct_to_dense(w);
        out.push_back(w);
    }
    return out;
}

}  // namespace

TEST(GreedyConditionCheck, Examples) {
    EXPECT_TRUE(greedy_condition_check(0.0, 0.3, 0.1));
    EXPECT_TRUE(greedy_condition_check(0.0, 2.0, 0.9));
    EXPECT_TRUE(greedy_condition_check(0.999, 0.0, 0.5));
    // gamma = 0.5, eps = 0.1: threshold 0.9 / 2.15
    EXPECT_TRUE(greedy_condition_check(0.6, 0.5, 0.1));
    EXPECT_FALSE(greedy_condition_check(0.7, 0.5, 0.1));
    EXPECT_TRUE(greedy_condition_check(std::sqrt(0.9 / 2.15) * (1 - 1e-12), 0.5, 0.1));
    EXPECT_FALSE(greedy_condition_check(std::sqrt(0.9 / 2.15) * (1 + 1e-12), 0.5, 0.1));
    EXPECT_FALSE(greedy_condition_check(0.5, 0.5, 1.0));
}

TEST(GreedySchedule, DeltaAndGammaSchedule) {
    GreedySchedule s;
    s.delta_m = {0.2, 0.1};
    EXPECT_EQ(s.delta_at(1), 0.2);
    EXPECT_EQ(s.delta_at(2), 0.1);
    EXPECT_EQ(s.delta_at(7), 0.1);
    EXPECT_NEAR(s.gamma_at(1), 0.4 / 0.6 * 1.001, 1e-15);
    EXPECT_GT(s.gamma_at(1), 2 * 0.2 / (1 - 2 * 0.2));
    s.delta_m = {0.5};
    EXPECT_TRUE(std::isinf(s.gamma_at(1)));
    s.delta_m = {};
    EXPECT_THROW(s.validate(), ConfigError);
    s.delta_m = {0.2};
    s.epsilon = 1.0;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(WeakGreedy, RankOneSolutionNeedsOneCorrection) {
    Problem p = small_rad2d();
    const auto t = ct_random(p.dims(), 1, 53);
    p.b = op_apply(p.a, t);
    const double delta = 0.01;
    GreedySchedule s;
    s.r_max = 5;
    s.delta_m = {delta};
    s.stop_tol = 2 * delta;
    const auto inner = oracle_inner(p, 30);
    const auto res = weak_greedy_solve(p, s, inner);
    EXPECT_EQ(res.diagnostics.status, "converged");
    ASSERT_EQ(res.corrections.size(), 1u);
    EXPECT_LE(inner.reference->error(res.u), 2 * delta * inner.reference->u_norm());
}

TEST(WeakGreedy, ExactRankGrowthAndDiagnostics) {
    const Problem& p = small_rad2d();
    GreedySchedule s;
    s.r_max = 4;
    s.stop_tol = 0.0;
    s.delta_m = {0.2};
    SolverConfig inner;
    inner.max_outer = 8;
    const auto res = weak_greedy_solve(p, s, inner);
    ASSERT_EQ(res.corrections.size(), 4u);
    EXPECT_EQ(res.u.rank(), 4);
    EXPECT_EQ(res.diagnostics.status, "r_max");
    // Each step starts where the previous one ended, up to estimator slack.
    const double slack = (1 + 0.2) / (1 - 0.2);
    for (std::size_t m = 1; m < res.diagnostics.steps.size(); ++m) {
        EXPECT_LE(res.diagnostics.steps[m].est_err, res.diagnostics.steps[m - 1].est_err * slack) << m;
    }
    for (const auto& st : res.diagnostics.steps) EXPECT_TRUE(std::isnan(st.f_norm));

    std::ostringstream os;
    write_diagnostics_csv(os, res.diagnostics);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "m,est_err,alpha_tilde,kappa,mu_lb_ok,condition_ok,rank_y_max,seconds");
    const auto j = diagnostics_to_json(res.diagnostics, s);
    EXPECT_EQ(j["status"], "r_max");
}

TEST(WeakGreedy, OracleErrorsDecreaseAndAlphaSandwichHolds) {
    const Problem p = [] {
        Problem q = small_rad2d();
        q.rx = build_weighted_metric(q, q.qoi->region, 10.0);
        return q;
    }();
    GreedySchedule s;
    s.r_max = 6;
    s.stop_tol = 0.0;
    s.delta_m = {0.1};
    s.adaptive_retry = false;
    const auto res = weak_greedy_solve(p, s, oracle_inner(p, 30));
    ASSERT_EQ(res.diagnostics.steps.size(), 6u);
    for (const auto& st : res.diagnostics.steps) {
        ASSERT_FALSE(std::isnan(st.alpha_true));
        EXPECT_LE(st.alpha_true, st.alpha_tilde_true * (1 + 1e-9)) << st.m;
        EXPECT_LE(st.alpha_tilde_true, (1 + st.gamma) * st.alpha_true * (1 + 1e-9)) << st.m;
        if ((1 + st.gamma) * st.alpha_true < 1) {
            EXPECT_LT(st.f_norm, st.f_norm_before) << st.m;
        }
    }
}

TEST(GreedyAudit, ExactCorrectionsHaveUnitKappa) {
    const Problem& p = small_rad2d();
    const ReferenceSolution ref(p);
    const auto corr = scripted_corrections(ref, p.rx, 6, 1.0);
    const auto rep = greedy_identities_audit(ref, p.rx, corr, {0.0});
    EXPECT_TRUE(rep.ok) << rep.failure;
    for (const auto& s : rep.steps) EXPECT_NEAR(s.kappa, 1.0, 1e-8) << s.m;
}

TEST(GreedyAudit, ScriptedSuboptimalCorrections) {
    const Problem p = [] {
        Problem q = small_rad2d();
        q.rx = build_weighted_metric(q, q.qoi->region, 25.0);
        return q;
    }();
    const ReferenceSolution ref(p);
    const auto corr = scripted_corrections(ref, p.rx, 5, 0.9);
    const auto rep = greedy_identities_audit(ref, p.rx, corr, {0.5});
    EXPECT_TRUE(rep.ok) << rep.failure;
    // <f, w> = |w|^2 for the optimal w, so kappa^2 = 2 / 0.9 - 1.
    for (const auto& s : rep.steps) {
        EXPECT_NEAR(s.kappa, std::sqrt(2.0 / 0.9 - 1.0), 1e-8) << s.m;
        EXPECT_NEAR(s.w_tilde_norm, 0.9 * s.w_opt_norm, 1e-10 * s.w_opt_norm);
    }
}

TEST(GreedyAudit, TelescopingOnMatrixProblem) {
    const Problem p = matrix_problem();
    const auto inner = oracle_inner(p, 20);
    GreedySchedule s;
    s.r_max = 5;
    s.stop_tol = 0.0;
    s.delta_m = {0.2};
    const auto res = weak_greedy_solve(p, s, inner);
    ASSERT_EQ(res.corrections.size(), 5u);
    const auto rep = greedy_identities_audit(*inner.reference, p.rx, res.corrections, {s.gamma_at(1)});
    EXPECT_TRUE(rep.ok) << rep.failure;
    for (const auto& st : rep.steps) {
        EXPECT_LE(st.telescoping_defect, 1e-10) << st.m;
        EXPECT_LE(st.energy_defect, 1e-9) << st.m;
    }
}

TEST(GreedyAudit, DetectsAnIncreasingCorrection) {
    const Problem& p = small_rad2d();
    const ReferenceSolution ref(p);
    auto corr = scripted_corrections(ref, p.rx, 2, 1.0);
    corr[1] = ct_scale(corr[1], -1.0);  // moves away from u
    const auto rep = greedy_identities_audit(ref, p.rx, corr, {0.0});
    EXPECT_FALSE(rep.ok);
    EXPECT_NE(rep.failure.find("step 2"), std::string::npos);
}
