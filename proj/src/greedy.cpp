#include "imr/greedy.hpp"

#include "imr/error.hpp"
#include "imr/lowrank_operator.hpp"
#include "imr/svd2d.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace imr {

double GreedySchedule::delta_at(int m) const {
    if (delta_m.empty()) throw ConfigError("greedy schedule: empty delta list");
    const auto i = static_cast<std::size_t>(std::max(m - 1, 0));
    return i < delta_m.size() ? delta_m[i] : delta_m.back();
}

double GreedySchedule::gamma_at(int m) const {
    const double d = delta_at(m);
    if (d >= 0.5) return std::numeric_limits<double>::infinity();
    return 2.0 * d / (1.0 - 2.0 * d) * (1.0 + 1e-3);
}

void GreedySchedule::validate() const {
    if (r_max < 1) throw ConfigError("greedy schedule: r_max must be >= 1");
    if (delta_m.empty()) throw ConfigError("greedy schedule: empty delta list");
    for (double d : delta_m) {
        if (!(d >= 0.0 && d < 1.0)) throw ConfigError("greedy schedule: every delta must lie in [0, 1)");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("greedy schedule: epsilon must lie in (0, 1)");
    if (max_condition_failures < 0) throw ConfigError("greedy schedule: max_condition_failures must be >= 0");
}

bool greedy_condition_check(double alpha_tilde, double gamma, double epsilon) {
    if (!std::isfinite(alpha_tilde) || !(gamma >= 0.0) || !(epsilon > 0.0 && epsilon < 1.0)) return false;
    if (std::isinf(gamma)) return alpha_tilde == 0.0;
    const double g = (1.0 + gamma) * (1.0 + gamma);
    return alpha_tilde * alpha_tilde <= (1.0 - epsilon) / (g - epsilon);
}

namespace {

using Clock = std::chrono::steady_clock;

struct Attempt {
    SolveResult res;
    double eps0 = 0.0;
    double eps_final = 0.0;
    double alpha_tilde = 0.0;
};

Attempt correct(const Problem& residual_problem, const SolverConfig& inner, double delta, int m) {
    SolverConfig c = inner;
    c.delta = delta;
    c.projector.target_rank = 1;
    c.projector.kind = residual_problem.a.order() == 2 ? ProjectorKind::svd2d : ProjectorKind::greedy_rank_one;
    c.reference = nullptr;
    c.seed = inner.seed + 104729u * static_cast<std::uint64_t>(m);
    Attempt a;
    a.res = gradient_solve(residual_problem, c);
    a.eps0 = a.res.trace.records.front().eps_hat;
    a.eps_final = a.res.trace.records.back().eps_hat;
    a.alpha_tilde = a.eps0 > 0.0 ? a.eps_final / a.eps0 : 0.0;
    return a;
}

}  // namespace

GreedyResult weak_greedy_solve(const Problem& problem, const GreedySchedule& sched, const SolverConfig& inner) {
    sched.validate();
    problem.validate();
    const auto t0 = Clock::now();
    GreedyResult out;
    GreedyDiagnostics& diag = out.diagnostics;
    out.u = CanonicalTensor::zero(problem.dims());
    const ReferenceSolution* ref = inner.reference.get();
    Vector u_dense;
    if (ref) u_dense = Vector::Zero(ref->u().size());

    double est_f0 = kNaN;
    int failures = 0;
    diag.status = "r_max";
    for (int m = 1; m <= sched.r_max; ++m) {
        const auto t_step = Clock::now();
        Problem rp = problem;
        rp.b = ct_sub(problem.b, op_apply(problem.a, out.u));

        GreedyStep step;
        step.m = m;
        step.delta = sched.delta_at(m);
        step.gamma = sched.gamma_at(m);
        Attempt att = correct(rp, inner, step.delta, m);
        const bool ok_first = greedy_condition_check(att.alpha_tilde, step.gamma, sched.epsilon);
        if ((att.alpha_tilde >= 1.0 || (sched.adaptive_retry && !ok_first)) && step.delta > 0.0) {
            step.retried = true;
            step.delta *= 0.5;
            step.gamma = step.delta >= 0.5 ? std::numeric_limits<double>::infinity()
                                          : 2.0 * step.delta / (1.0 - 2.0 * step.delta) * (1.0 + 1e-3);
            att = correct(rp, inner, step.delta, m);
        }
        if (!(att.alpha_tilde < 1.0)) {
            diag.status = "stalled";
            break;
        }
        const CanonicalTensor& w = att.res.u;
        out.u = ct_add(out.u, w);
        out.corrections.push_back(w);
        if (m == 1) est_f0 = att.eps0;

        step.est_err_before = att.eps0;
        step.est_err = att.eps_final;
        step.alpha_tilde = att.alpha_tilde;
        const double wn = ct_norm(w, problem.rx);
        if (wn > 0.0) {
            const double k2 = (att.eps0 * att.eps0 - att.eps_final * att.eps_final) / (wn * wn);
            step.kappa = k2 > 0.0 ? std::sqrt(k2) : kNaN;
        }
        const double a2 = att.alpha_tilde * att.alpha_tilde;
        const double g2 = (1.0 + step.gamma) * (1.0 + step.gamma);
        step.mu_lb_ok = std::isfinite(g2) && (1.0 - g2 * a2) / (1.0 - a2) >= sched.epsilon;
        step.condition_ok = greedy_condition_check(att.alpha_tilde, step.gamma, sched.epsilon);
        step.inner_iterations = static_cast<int>(att.res.trace.records.size()) - 1;
        for (const auto& r : att.res.trace.records) step.rank_y_max = std::max(step.rank_y_max, r.rank_y);

        if (ref) {
            const FlatSystem& sys = ref->system();
            const Vector f_prev = ref->u() - u_dense;
            const Vector wd = ct_to_dense(w);
            u_dense += wd;
            step.f_norm_before = sys.x_norm(f_prev);
            step.f_norm = sys.x_norm(f_prev - wd);
            if (step.f_norm_before > 0.0) {
                step.alpha_tilde_true = step.f_norm / step.f_norm_before;
                const double ww = sys.x_inner(wd, wd);
                if (ww > 0.0) step.kappa_true = std::sqrt(std::max(2.0 * sys.x_inner(f_prev, wd) / ww - 1.0, 0.0));
                if (problem.a.order() == 2) {
                    const CanonicalTensor w_opt = svd2d_project(ct_from_dense(ref->dims(), f_prev), 1, problem.rx);
                    step.alpha_true = sys.x_norm(f_prev - ct_to_dense(w_opt)) / step.f_norm_before;
                }
            }
        }
        step.seconds = std::chrono::duration<double>(Clock::now() - t_step).count();
        diag.steps.push_back(step);

        failures = step.condition_ok ? 0 : failures + 1;
        if (est_f0 > 0.0 && att.eps_final <= sched.stop_tol * est_f0) {
            diag.status = "converged";
            break;
        }
        if (sched.max_condition_failures > 0 && failures >= sched.max_condition_failures) {
            diag.status = "condition_failed";
            break;
        }
    }
    diag.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

AuditReport greedy_identities_audit(const ReferenceSolution& ref, const RankOneMetric& rx,
                                    const std::vector<CanonicalTensor>& corrections,
                                    const std::vector<double>& gammas, double rel_tol) {
    if (ref.dims().size() != 2) throw DimensionMismatch("greedy audit needs an order-2 problem");
    const FlatSystem& sys = ref.system();
    AuditReport report;
    Vector f = ref.u();
    const double f0_sq = sys.x_inner(f, f);
    double telescoped = 0.0;
    auto fail = [&](AuditStep& s, const std::string& what) {
        s.ok = false;
        if (!s.failure.empty()) s.failure += "; ";
        s.failure += what;
        if (report.ok) {
            report.ok = false;
            report.failure = "step " + std::to_string(s.m) + ": " + what;
        }
    };
    for (std::size_t i = 0; i < corrections.size(); ++i) {
        AuditStep s;
        s.m = static_cast<int>(i) + 1;
        const Vector wt = ct_to_dense(corrections[i]);
        const Vector w_opt = ct_to_dense(svd2d_project(ct_from_dense(ref.dims(), f), 1, rx));
        const double ff = sys.x_inner(f, f);
        const double wtwt = sys.x_inner(wt, wt);
        const double fwt = sys.x_inner(f, wt);
        const Vector f_next = f - wt;
        const double fn2 = sys.x_inner(f_next, f_next);
        s.f_prev_norm = std::sqrt(ff);
        s.f_norm = std::sqrt(fn2);
        s.w_tilde_norm = std::sqrt(wtwt);
        s.w_opt_norm = sys.x_norm(w_opt);
        const double k2 = 2.0 * fwt / wtwt - 1.0;
        if (!(wtwt > 0.0) || !(k2 > 0.0)) {
            fail(s, "kappa undefined (no energy decrease)");
            report.steps.push_back(s);
            f = f_next;
            continue;
        }
        s.kappa = std::sqrt(k2);

        // (i) energy identity
        s.energy_defect = std::abs(fn2 - (ff - k2 * wtwt)) / ff;
        if (s.energy_defect > rel_tol) fail(s, "energy identity");

        // (ii) sandwich with mu from gamma
        const double alpha = std::sqrt(std::max(sys.x_inner(f - w_opt, f - w_opt), 0.0) / ff);
        const double alpha_t = std::sqrt(fn2 / ff);
        double gamma = i < gammas.size() ? gammas[i] : (gammas.empty() ? 0.0 : gammas.back());
        if (!(alpha_t <= (1.0 + gamma) * alpha * (1.0 + rel_tol)) || !std::isfinite(gamma)) {
            gamma = alpha > 0.0 ? std::max(alpha_t / alpha - 1.0, 0.0) : 0.0;
            s.gamma_effective = true;
        }
        s.gamma_used = gamma;
        const double g2 = (1.0 + gamma) * (1.0 + gamma);
        s.mu = std::sqrt(std::max((1.0 - g2 * alpha * alpha) / (1.0 - alpha * alpha), 0.0));
        const double kw = s.kappa * s.w_tilde_norm;
        const double scale = s.w_opt_norm;
        if (s.mu * s.w_opt_norm > kw + rel_tol * scale) fail(s, "lower sandwich bound");
        if (kw > s.w_opt_norm + rel_tol * scale) fail(s, "upper sandwich bound");

        // (iii) mu / 2 <= kappa
        if (s.mu / 2.0 > s.kappa * (1.0 + rel_tol)) fail(s, "mu/2 <= kappa");

        // (iv) telescoping
        telescoped += k2 * wtwt;
        s.telescoping_defect = std::abs((f0_sq - fn2) - telescoped) / f0_sq;
        if (s.telescoping_defect > rel_tol) fail(s, "telescoping identity");

        report.steps.push_back(s);
        f = f_next;
    }
    return report;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

nlohmann::json num(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

void write_diagnostics_csv(std::ostream& os, const GreedyDiagnostics& diag) {
    os << "m,est_err,alpha_tilde,kappa,mu_lb_ok,condition_ok,rank_y_max,seconds\n";
    for (const auto& s : diag.steps) {
        os << s.m << ',' << fmt(s.est_err) << ',' << fmt(s.alpha_tilde) << ',' << fmt(s.kappa) << ','
           << (s.mu_lb_ok ? 1 : 0) << ',' << (s.condition_ok ? 1 : 0) << ',' << s.rank_y_max << ',' << fmt(s.seconds)
           << '\n';
    }
}

nlohmann::json diagnostics_to_json(const GreedyDiagnostics& diag, const GreedySchedule& sched) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : diag.steps) {
        steps.push_back({{"m", s.m},
                         {"delta", s.delta},
                         {"gamma", num(s.gamma)},
                         {"est_err_before", s.est_err_before},
                         {"est_err", s.est_err},
                         {"alpha_tilde", s.alpha_tilde},
                         {"kappa", num(s.kappa)},
                         {"mu_lb_ok", s.mu_lb_ok},
                         {"condition_ok", s.condition_ok},
                         {"retried", s.retried},
                         {"rank_y_max", s.rank_y_max},
                         {"inner_iterations", s.inner_iterations},
                         {"seconds", s.seconds},
                         {"f_norm_before", num(s.f_norm_before)},
                         {"f_norm", num(s.f_norm)},
                         {"alpha_true", num(s.alpha_true)},
                         {"alpha_tilde_true", num(s.alpha_tilde_true)},
                         {"kappa_true", num(s.kappa_true)}});
    }
    return {{"status", diag.status},
            {"seconds", diag.seconds},
            {"schedule",
             {{"r_max", sched.r_max},
              {"delta_m", sched.delta_m},
              {"epsilon", sched.epsilon},
              {"stop_tol", sched.stop_tol},
              {"max_condition_failures", sched.max_condition_failures},
              {"adaptive_retry", sched.adaptive_retry}}},
            {"steps", steps}};
}

nlohmann::json audit_to_json(const AuditReport& report) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : report.steps) {
        steps.push_back({{"m", s.m},
                         {"f_prev_norm", s.f_prev_norm},
                         {"f_norm", s.f_norm},
                         {"w_tilde_norm", s.w_tilde_norm},
                         {"w_opt_norm", s.w_opt_norm},
                         {"kappa", s.kappa},
                         {"mu", s.mu},
                         {"gamma_used", s.gamma_used},
                         {"gamma_effective", s.gamma_effective},
                         {"energy_defect", s.energy_defect},
                         {"telescoping_defect", s.telescoping_defect},
                         {"ok", s.ok},
                         {"failure", s.failure}});
    }
    return {{"ok", report.ok}, {"failure", report.failure}, {"steps", steps}};
}

}  // namespace imr
