#include "imr/gradient.hpp"

#include "imr/error.hpp"
#include "imr/lowrank_operator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace imr {

void SolverConfig::validate() const {
    if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("solver: delta must lie in [0, 1)");
    if (!(rho > 0.0)) throw ConfigError("solver: rho must be positive");
    if (max_outer < 0) throw ConfigError("solver: max_outer must be >= 0");
    if (stagnation_window < 1 || divergence_window < 1) throw ConfigError("solver: windows must be >= 1");
    if (delta == 0.0 && !oracle) throw ConfigError("solver: delta = 0 needs an exact residual oracle");
}

double error_estimator(double ynorm, double delta) {
    if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("error estimator: delta must lie in [0, 1)");
    return ynorm / std::sqrt(1.0 - delta * delta);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Geometric mean of positive ratios; 0 if any ratio vanishes.
double geometric_mean(const std::vector<double>& ratios) {
    if (ratios.empty()) return kNaN;
    double acc = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0)) return 0.0;
        acc += std::log(r);
    }
    return std::exp(acc / static_cast<double>(ratios.size()));
}

}  // namespace

void summarize_trace(IterationTrace& trace) {
    const auto& rec = trace.records;
    if (rec.size() < 2) return;
    {
        const double final_eps = rec.back().eps_hat;
        std::vector<double> ratios;
        for (std::size_t k = 0; k + 1 < rec.size(); ++k) {
            if (rec[k].eps_hat >= 2.0 * final_eps && rec[k].eps_hat > 0.0) {
                ratios.push_back(rec[k + 1].eps_hat / rec[k].eps_hat);
            }
        }
        trace.rate_estimated = geometric_mean(ratios);
    }
    if (std::isnan(rec.back().true_err)) return;
    const double e_final = rec.back().true_err;
    if (!std::isnan(trace.best_error)) {
        const double e_star = trace.best_error;
        std::vector<double> ratios;
        for (std::size_t k = 0; k + 1 < rec.size(); ++k) {
            if (rec[k].true_err >= 2.0 * e_final && rec[k].true_err > 0.0) {
                ratios.push_back(std::max(rec[k + 1].true_err - e_star, 0.0) / rec[k].true_err);
            }
        }
        trace.rate = geometric_mean(ratios);
        trace.gamma_tilde = e_star > 0.0 ? e_final / e_star - 1.0 : kNaN;
    }
}

namespace {

SolveResult run_iteration(const Problem& problem, const SolverConfig& cfg, bool exact_mode) {
    cfg.validate();
    problem.validate();
    cfg.projector.validate(problem.a.order());
    const auto t_start = Clock::now();

    SolveResult out;
    IterationTrace& trace = out.trace;
    auto warn = [&](const std::string& w) {
        if (std::find(trace.warnings.begin(), trace.warnings.end(), w) == trace.warnings.end()) {
            trace.warnings.push_back(w);
        }
    };
    if (cfg.reference && problem.a.order() == 2) {
        trace.best_error = cfg.reference->best_error(cfg.projector.target_rank);
    }

    auto ry = std::make_shared<const DualMetric>(problem.a, problem.rx);
    CanonicalTensor u = CanonicalTensor::zero(problem.dims());
    std::vector<double> eps;
    for (int k = 0;; ++k) {
        const auto t_iter = Clock::now();
        const CanonicalTensor f = ct_sub(op_apply(problem.a, u), problem.b);
        const ResidualProblem rp(ry, f);
        LambdaResult lam;
        if (cfg.oracle) {
            lam = (*cfg.oracle)(rp, cfg.delta, cfg.seed + 7919u * static_cast<std::uint64_t>(k));
        } else {
            LambdaConfig lc = cfg.lambda;
            lc.delta = cfg.delta;
            lc.als.seed = cfg.seed + 1000u * static_cast<std::uint64_t>(k);
            lam = lambda_delta(rp, lc);
            if (lam.report.precision_not_certified) warn("residual map hit max_rank before its stopping test");
            for (const auto& w : lam.report.warnings) warn(w);
        }

        IterationRecord rec;
        rec.k = k;
        rec.rank_u = u.rank();
        rec.rank_y = lam.y.rank();
        rec.y_norm = lam.report.y_norm;
        rec.eps_hat = error_estimator(rec.y_norm, cfg.delta);
        rec.lambda_certified = lam.report.certified;
        if (cfg.reference) {
            rec.true_err = cfg.reference->error(u);
            rec.tau_hat = rec.true_err > 0 ? rec.eps_hat / rec.true_err : kNaN;
            const FlatSystem& sys = cfg.reference->system();
            const Vector fd = ct_to_dense(f);
            const Vector r = sys.dual_solve(fd);
            const Vector diff = ct_to_dense(lam.y) - r;
            const SparseMatrix& a = sys.matrix();
            const double dd = diff.dot(a * sys.metric_solve(a.transpose() * diff));
            const double rr = fd.dot(r);
            rec.delta_eff = rr > 0 ? std::sqrt(std::max(dd, 0.0) / rr) : 0.0;
        }
        eps.push_back(rec.eps_hat);

        std::string stop;
        if (k >= cfg.max_outer) {
            stop = "max_outer";
        } else if (eps.front() == 0.0 || rec.eps_hat <= cfg.stop_tol * eps.front()) {
            stop = "tolerance";
        } else if (k >= cfg.divergence_window &&
                   rec.eps_hat > cfg.divergence_factor * eps[eps.size() - 1 - static_cast<std::size_t>(cfg.divergence_window)]) {
            stop = "diverged";
            warn("estimated error grew by more than the divergence factor");
        } else if (!exact_mode && k >= cfg.stagnation_window) {
            bool flat = true;
            for (int j = 0; j < cfg.stagnation_window && flat; ++j) {
                const double a = eps[eps.size() - 1 - static_cast<std::size_t>(j)];
                const double b = eps[eps.size() - 2 - static_cast<std::size_t>(j)];
                flat = std::abs(a - b) <= cfg.stagnation_tol * std::max(a, b);
            }
            if (flat) stop = "stagnation";
        }
        if (!stop.empty()) {
            rec.seconds = seconds_since(t_iter);
            trace.records.push_back(rec);
            trace.stop_reason = stop;
            break;
        }

        // v = u - rho R_X^{-1} A^T y, formed exactly before projection.
        const CanonicalTensor step = metric_solve(problem.rx, op_apply_adjoint(problem.a, lam.y));
        const CanonicalTensor v = ct_add(u, ct_scale(step, -cfg.rho));
        if (v.rank() > cfg.rank_warning) warn("pre-projection rank exceeded the warning threshold");
        ProjectionConfig pc = cfg.projection;
        pc.als.seed = cfg.seed + 31u * static_cast<std::uint64_t>(k) + 17u;
        u = project_best(v, cfg.projector, problem.rx, pc);
        rec.seconds = seconds_since(t_iter);
        trace.records.push_back(rec);
    }
    out.u = u;
    trace.seconds = seconds_since(t_start);
    summarize_trace(trace);
    return out;
}

}  // namespace

SolveResult gradient_solve(const Problem& problem, const SolverConfig& cfg) {
    if (cfg.rho != 1.0) throw ConfigError("the perturbed iteration uses rho = 1; use the ideal reference for other steps");
    return run_iteration(problem, cfg, cfg.delta == 0.0);
}

SolveResult ideal_reference_solve(const Problem& problem, const FormatSpec& spec, SolverConfig cfg) {
    if (!cfg.reference) cfg.reference = std::make_shared<const ReferenceSolution>(problem);
    if (!cfg.oracle) {
        cfg.oracle = std::make_shared<const OracleLambda>(
            std::shared_ptr<const FlatSystem>(cfg.reference, &cfg.reference->system()), problem.dims());
    }
    cfg.delta = 0.0;
    cfg.projector = spec;
    // With exact residuals and rho = 1 the first step lands on the projection.
    if (cfg.rho == 1.0) cfg.max_outer = std::min(cfg.max_outer, 1);
    return run_iteration(problem, cfg, true);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
    os << "k,yk_norm,eps_hat,true_err,tau_hat,rank_yk,seconds\n";
    for (const auto& r : trace.records) {
        os << r.k << ',' << fmt(r.y_norm) << ',' << fmt(r.eps_hat) << ',' << fmt(r.true_err) << ','
           << fmt(r.tau_hat) << ',' << r.rank_y << ',' << fmt(r.seconds) << '\n';
    }
}

nlohmann::json trace_to_json(const IterationTrace& trace) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        return v;
    };
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : trace.records) {
        recs.push_back({{"k", r.k},
                        {"rank_u", r.rank_u},
                        {"rank_y", r.rank_y},
                        {"y_norm", r.y_norm},
                        {"eps_hat", r.eps_hat},
                        {"true_err", num(r.true_err)},
                        {"tau_hat", num(r.tau_hat)},
                        {"delta_eff", num(r.delta_eff)},
                        {"lambda_certified", r.lambda_certified},
                        {"seconds", r.seconds}});
    }
    return {{"iterations", static_cast<int>(trace.records.size()) - 1},
            {"stop_reason", trace.stop_reason},
            {"rate_estimated", num(trace.rate_estimated)},
            {"rate", num(trace.rate)},
            {"gamma_tilde", num(trace.gamma_tilde)},
            {"best_error", num(trace.best_error)},
            {"warnings", trace.warnings},
            {"seconds", trace.seconds},
            {"records", recs}};
}

}  // namespace imr
