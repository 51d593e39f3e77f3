// Experiment driver: problem generation, single solves, solver comparisons,
// norm/rank sweeps and oracle identity audits.

#include "imr/cmr.hpp"
#include "imr/error.hpp"
#include "imr/flat_system.hpp"
#include "imr/gradient.hpp"
#include "imr/greedy.hpp"
#include "imr/problems.hpp"
#include "imr/qoi.hpp"
#include "imr/serialization.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace imr;

namespace {

constexpr const char* kVersion = "1.0.0";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

json read_json_file(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open " + p.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Configuration

const json kDefaults = {
    {"problem", {{"kind", "rad2d"}, {"mesh_n", 10}}},
    {"solvers", {"aimr-direct"}},
    {"deltas", {0.2}},
    {"ranks", {5}},
    {"norms", {"canonical"}},
    {"weight", 1000.0},
    {"rho", 1.0},
    {"projector", "auto"},
    {"max_outer", 100},
    {"seed", 0},
    {"oracle", false},
    {"reference", "auto"},
    {"stop_tol", 1e-12},
    {"lambda", {{"p", 3}, {"max_rank", 100}}},
    {"greedy", {{"stop_tol", 0.0}, {"epsilon", 0.1}, {"adaptive_retry", false}}},
    {"threads", 0},
};

const std::vector<std::string> kSolvers = {"aimr-direct", "aimr-greedy", "cmr-direct", "cmr-greedy", "ideal-reference",
                                           "svd-optimum"};

json effective_config(const json& user) {
    json cfg = kDefaults;
    cfg.merge_patch(user);
    for (const char* key : {"solvers", "deltas", "ranks", "norms"}) {
        if (!cfg[key].is_array() || cfg[key].empty()) throw ConfigError(std::string("config: '") + key + "' must be a nonempty list");
    }
    for (const auto& s : cfg["solvers"]) {
        const auto name = s.get<std::string>();
        if (std::find(kSolvers.begin(), kSolvers.end(), name) == kSolvers.end())
            throw ConfigError("config: unknown solver " + name);
    }
    for (const auto& d : cfg["deltas"]) {
        const double v = d.get<double>();
        if (!(v >= 0.0 && v < 1.0)) throw ConfigError("config: deltas must lie in [0, 1)");
    }
    for (const auto& r : cfg["ranks"])
        if (r.get<int>() < 1) throw ConfigError("config: ranks must be >= 1");
    for (const auto& n : cfg["norms"]) {
        const auto s = n.get<std::string>();
        if (s != "canonical" && s != "weighted") throw ConfigError("config: norms are canonical or weighted");
    }
    if (!(cfg["weight"].get<double>() > 0.0)) throw ConfigError("config: weight must be positive");
    return cfg;
}

std::string config_hash(const json& cfg) {
    json h = cfg;
    h.erase("threads");
    h.erase("output");
    return hex(fnv1a(h.dump()));
}

// ---------------------------------------------------------------------------
// Problems

struct Loaded {
    Problem problem;
    std::optional<StochasticProblem> stochastic;
};

Loaded load_problem(const json& pj) {
    Loaded out;
    if (pj.contains("path")) {
        out.problem = problem_from_json(read_json_file(pj["path"].get<std::string>()));
        return out;
    }
    const auto kind = pj.value("kind", "rad2d");
    const int mesh_n = pj.value("mesh_n", 10);
    if (kind == "rad2d") {
        Rad2dSpec spec;
        spec.xi1_degree = pj.value("xi1_degree", spec.xi1_degree);
        spec.xi2_degree = pj.value("xi2_degree", spec.xi2_degree);
        out.stochastic = build_rad2d(mesh_n, spec);
    } else if (kind == "highdim") {
        HighdimSpec spec;
        spec.degree = pj.value("degree", spec.degree);
        spec.modes = pj.value("modes", spec.modes);
        spec.kappa0 = pj.value("kappa0", spec.kappa0);
        out.stochastic = build_highdim_diffusion(mesh_n, spec);
    } else if (kind == "identity") {
        const auto dims = pj.at("dims").get<std::vector<Index>>();
        Problem p;
        p.a = LowRankOperator::identity(dims);
        p.b = ct_random(dims, pj.value("rhs_rank", 1), pj.value("rhs_seed", 1));
        p.rx = RankOneMetric::identity(dims);
        p.meta = {{"kind", "identity"}, {"dims", dims}};
        out.problem = std::move(p);
        return out;
    } else {
        throw ConfigError("unknown problem kind " + kind);
    }
    out.problem = out.stochastic->problem;
    return out;
}

Problem with_norm(const Problem& p, const std::string& norm, double weight) {
    if (norm == "canonical") return p;
    if (!p.qoi) throw ConfigError("weighted norm needs a problem with a QoI region");
    Problem q = p;
    q.rx = build_weighted_metric(p, p.qoi->region, weight);
    return q;
}

bool reference_wanted(const json& cfg, const Problem& p) {
    const auto& r = cfg["reference"];
    if (r.is_boolean()) return r.get<bool>();
    double n = 1;
    for (Index d : p.dims()) n *= static_cast<double>(d);
    return n <= kFlatSolveGuard;
}

// ---------------------------------------------------------------------------
// Running one cell

struct Cell {
    std::string solver;
    double delta = 0;
    Index rank = 1;
    std::string norm = "canonical";
    std::uint64_t seed = 0;
    std::string hash;
};

struct CellOutput {
    CanonicalTensor u;
    std::optional<IterationTrace> trace;
    std::optional<GreedyDiagnostics> greedy;
    json summary;
};

struct Context {
    json cfg;
    Problem base;
    std::map<std::string, Problem> by_norm;
    std::map<std::string, std::shared_ptr<const ReferenceSolution>> refs;
    std::optional<SparseMatrix> weighted_gram;
    std::optional<QoiStats> exact_qoi;
};

ProjectorKind projector_for(const json& cfg, Index order) {
    const auto s = cfg["projector"].get<std::string>();
    if (s == "auto") return order == 2 ? ProjectorKind::svd2d : ProjectorKind::als;
    return projector_from_string(s);
}

SolverConfig inner_config(const Context& ctx, const Cell& c, const Problem& p) {
    const json& cfg = ctx.cfg;
    SolverConfig s;
    s.delta = c.delta;
    s.rho = cfg["rho"].get<double>();
    s.max_outer = cfg["max_outer"].get<int>();
    s.stop_tol = cfg["stop_tol"].get<double>();
    s.projector.target_rank = c.rank;
    s.projector.kind = projector_for(cfg, p.a.order());
    s.lambda.p = cfg["lambda"].value("p", 3);
    s.lambda.max_rank = cfg["lambda"].value("max_rank", 100);
    s.seed = c.seed;
    auto ref = ctx.refs.count(c.norm) ? ctx.refs.at(c.norm) : nullptr;
    s.reference = ref;
    if ((cfg["oracle"].get<bool>() || c.delta == 0.0) && c.solver != "ideal-reference") {
        if (!ref) throw ConfigError("oracle residuals need a reference solution (problem too large or disabled)");
        auto sys = std::shared_ptr<const FlatSystem>(ref, &ref->system());
        s.oracle = std::make_shared<OracleLambda>(sys, p.dims());
    }
    return s;
}

CellOutput run_cell(const Context& ctx, const Cell& c) {
    const Problem& p = ctx.by_norm.at(c.norm);
    const json& cfg = ctx.cfg;
    CellOutput out;
    FormatSpec spec;
    spec.target_rank = c.rank;
    spec.kind = projector_for(cfg, p.a.order());
    if (c.solver == "aimr-direct") {
        auto r = gradient_solve(p, inner_config(ctx, c, p));
        out.u = std::move(r.u);
        out.trace = std::move(r.trace);
    } else if (c.solver == "ideal-reference") {
        auto r = ideal_reference_solve(p, spec, inner_config(ctx, c, p));
        out.u = std::move(r.u);
        out.trace = std::move(r.trace);
    } else if (c.solver == "aimr-greedy") {
        GreedySchedule sched;
        sched.r_max = static_cast<int>(c.rank);
        sched.delta_m = {c.delta};
        sched.stop_tol = cfg["greedy"].value("stop_tol", 0.0);
        sched.epsilon = cfg["greedy"].value("epsilon", 0.1);
        sched.adaptive_retry = cfg["greedy"].value("adaptive_retry", false);
        auto inner = inner_config(ctx, c, p);
        inner.projector.target_rank = 1;
        auto r = weak_greedy_solve(p, sched, inner);
        out.u = std::move(r.u);
        out.greedy = std::move(r.diagnostics);
    } else if (c.solver == "cmr-direct" || c.solver == "cmr-greedy") {
        CmrConfig cc;
        cc.mode = c.solver == "cmr-direct" ? CmrMode::direct : CmrMode::greedy;
        cc.als.seed = c.seed;
        cc.reference = ctx.refs.count(c.norm) ? ctx.refs.at(c.norm) : nullptr;
        auto r = cmr_solve(p, spec, cc);
        out.u = std::move(r.u);
        out.trace = std::move(r.trace);
    } else if (c.solver == "svd-optimum") {
        if (!ctx.refs.count(c.norm)) throw ConfigError("svd-optimum needs a reference solution");
        out.u = ctx.refs.at(c.norm)->best_approximation(c.rank);
    } else {
        throw ConfigError("unknown solver " + c.solver);
    }

    // Errors against the reference, in both norms, and QoI statistics.
    double err_c = kNaN, err_w = kNaN, qm = kNaN, qv = kNaN;
    if (ctx.refs.count("canonical")) {
        const Vector& u = ctx.refs.at("canonical")->u();
        const Vector e = u - ct_to_dense(out.u);
        err_c = e.norm() / u.norm();
        if (ctx.weighted_gram) err_w = std::sqrt(e.dot(*ctx.weighted_gram * e) / u.dot(*ctx.weighted_gram * u));
    }
    if (ctx.exact_qoi && p.qoi) {
        const QoiStats s = qoi_stats(out.u, *p.qoi);
        const double scale = std::sqrt(ctx.exact_qoi->variance + ctx.exact_qoi->mean * ctx.exact_qoi->mean);
        qm = std::abs(s.mean - ctx.exact_qoi->mean) / scale;
        qv = std::abs(s.variance - ctx.exact_qoi->variance) / ctx.exact_qoi->variance;
    }
    out.summary = {{"solver", c.solver}, {"delta", c.delta},      {"norm", c.norm},       {"rank", c.rank},
                   {"seed", c.seed},     {"config_hash", c.hash}, {"rank_u", out.u.rank()}, {"err_X_canonical", err_c},
                   {"err_X_weighted", err_w}, {"qoi_mean_err", qm}, {"qoi_var_err", qv}};
    if (out.trace) out.summary["stop_reason"] = out.trace->stop_reason;
    if (out.greedy) out.summary["greedy_status"] = out.greedy->status;
    return out;
}

Context make_context(const json& cfg) {
    Context ctx;
    ctx.cfg = cfg;
    const Loaded loaded = load_problem(cfg["problem"]);
    ctx.base = loaded.problem;
    ctx.base.validate();
    const double weight = cfg["weight"].get<double>();
    const bool want_ref = reference_wanted(cfg, ctx.base);
    for (const auto& n : cfg["norms"]) {
        const auto norm = n.get<std::string>();
        ctx.by_norm[norm] = with_norm(ctx.base, norm, weight);
    }
    if (want_ref) {
        ctx.refs["canonical"] = reference_solve(with_norm(ctx.base, "canonical", weight));
        if (ctx.by_norm.count("weighted")) ctx.refs["weighted"] = reference_solve(ctx.by_norm.at("weighted"));
        if (ctx.base.qoi) {
            // On coarse meshes the region may hold no node; the weighted
            // column is then reported as nan unless that norm was requested.
            try {
                ctx.weighted_gram = metric_to_sparse(build_weighted_metric(ctx.base, ctx.base.qoi->region, weight));
            } catch (const ConfigError&) {
                if (ctx.by_norm.count("weighted")) throw;
            }
            ctx.exact_qoi = qoi_stats(ctx.refs["canonical"]->u_tensor(), *ctx.base.qoi);
        }
    }
    return ctx;
}

std::vector<Cell> make_cells(const json& cfg) {
    std::vector<Cell> cells;
    const auto master = cfg["seed"].get<std::uint64_t>();
    const auto hash = config_hash(cfg);
    for (const auto& n : cfg["norms"])
        for (const auto& s : cfg["solvers"])
            for (const auto& d : cfg["deltas"])
                for (const auto& r : cfg["ranks"]) {
                    Cell c;
                    c.solver = s.get<std::string>();
                    c.delta = d.get<double>();
                    c.rank = r.get<Index>();
                    c.norm = n.get<std::string>();
                    if (c.solver == "ideal-reference") c.delta = 0.0;
                    const std::string key = c.solver + "|" + num(c.delta) + "|" + std::to_string(c.rank);
                    c.seed = splitmix64(master ^ fnv1a(key));
                    c.hash = hash;
                    cells.push_back(c);
                }
    // Solvers without a delta dependence would otherwise repeat.
    std::vector<Cell> unique;
    for (const auto& c : cells) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const Cell& u) {
            return u.solver == c.solver && u.rank == c.rank && u.norm == c.norm && u.delta == c.delta;
        });
        if (!dup) unique.push_back(c);
    }
    return unique;
}

// ---------------------------------------------------------------------------
// Output

fs::path output_dir(const json& cfg, const std::string& command) {
    const char* root = std::getenv("IMR_OUTPUT_ROOT");
    fs::path base = root ? fs::path(root) : fs::current_path();
    const std::string name = cfg.value("output", command + "-" + config_hash(cfg));
    return base / name;
}

std::string compiler_string() {
    std::ostringstream os;
#if defined(__clang__)
    os << "clang " << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
    os << "gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#endif
    return os.str();
}

void write_manifest(const fs::path& dir, const json& cfg, const std::string& command, double seconds,
                    const std::vector<std::string>& artifacts) {
    json m = {{"command", command},
              {"config", cfg},
              {"config_hash", config_hash(cfg)},
              {"seed", cfg["seed"]},
              {"versions",
               {{"imr", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"compiler", compiler_string()}}},
              {"wall_seconds", seconds},
              {"artifacts", artifacts}};
    atomic_write(dir / "manifest.json", m.dump(2) + "\n");
}

std::string compare_header() {
    return "config_hash,solver,delta,norm,rank,err_X_canonical,err_X_weighted,qoi_mean_err,qoi_var_err\n";
}

std::string compare_row(const json& s) {
    std::ostringstream os;
    os << s["config_hash"].get<std::string>() << ',' << s["solver"].get<std::string>() << ','
       << num(s["delta"].get<double>()) << ',' << s["norm"].get<std::string>() << ',' << s["rank"].get<Index>();
    for (const char* k : {"err_X_canonical", "err_X_weighted", "qoi_mean_err", "qoi_var_err"}) {
        os << ',' << (s[k].is_null() ? std::string("nan") : num(s[k].get<double>()));
    }
    os << '\n';
    return os.str();
}

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------
// Commands

int cmd_make_problem(const json& pj, const fs::path& dir, TensorEncoding enc) {
    const auto t0 = Clock::now();
    const Loaded l = load_problem(pj);
    std::vector<std::string> artifacts = {"descriptor.json", "problem.json", "operator.json", "rhs.tensor"};
    atomic_write(dir / "descriptor.json", pj.dump(2) + "\n");
    atomic_write(dir / "problem.json", problem_to_json(l.problem).dump() + "\n");
    atomic_write(dir / "operator.json", operator_to_json(l.problem.a).dump() + "\n");
    save_tensor(dir / "rhs.tensor", l.problem.b, enc);
    json cfg = {{"problem", pj}, {"seed", 0}};
    write_manifest(dir, cfg, "make-problem", since(t0), artifacts);
    std::cout << json{{"status", "ok"}, {"output", dir.string()}, {"dims", l.problem.dims()},
                      {"operator_rank", l.problem.a.rank()}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_solve(const json& cfg, const std::string& command) {
    const auto t0 = Clock::now();
    const fs::path dir = output_dir(cfg, command);
    const Context ctx = make_context(cfg);
    auto cells = make_cells(cfg);
    const Cell& c = cells.front();
    const CellOutput out = run_cell(ctx, c);
    std::vector<std::string> artifacts = {"solution.tensor", "summary.json"};
    save_tensor(dir / "solution.tensor", out.u);
    if (out.trace) {
        std::ostringstream csv;
        write_trace_csv(csv, *out.trace);
        atomic_write(dir / "trace.csv", csv.str());
        atomic_write(dir / "trace.json", trace_to_json(*out.trace).dump(2) + "\n");
        artifacts.push_back("trace.csv");
        artifacts.push_back("trace.json");
    }
    if (out.greedy) {
        GreedySchedule sched;
        std::ostringstream csv;
        write_diagnostics_csv(csv, *out.greedy);
        atomic_write(dir / "greedy.csv", csv.str());
        atomic_write(dir / "greedy.json", diagnostics_to_json(*out.greedy, sched).dump(2) + "\n");
        artifacts.push_back("greedy.csv");
        artifacts.push_back("greedy.json");
    }
    atomic_write(dir / "summary.json", out.summary.dump(2) + "\n");
    write_manifest(dir, cfg, command, since(t0), artifacts);
    std::cout << out.summary.dump() << "\n";
    return 0;
}

int cmd_grid(const json& cfg, const std::string& command) {
    const auto t0 = Clock::now();
    const fs::path dir = output_dir(cfg, command);
    const Context ctx = make_context(cfg);
    const auto cells = make_cells(cfg);
    std::vector<json> results(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};
    int threads = cfg["threads"].get<int>();
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min<int>(threads, static_cast<int>(cells.size()));
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                const CellOutput out = run_cell(ctx, cells[i]);
                results[i] = out.summary;
                const std::string name = "cell-" + hex(fnv1a(cells[i].solver + "|" + num(cells[i].delta) + "|" +
                                                             std::to_string(cells[i].rank) + "|" + cells[i].norm));
                atomic_write(dir / "cells" / (name + ".json"), out.summary.dump(2) + "\n");
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!errors[i].empty()) throw NumericalFailure("cell " + cells[i].solver + " rank " + std::to_string(cells[i].rank) + ": " + errors[i]);

    std::string csv = compare_header();
    for (const auto& r : results) csv += compare_row(r);
    atomic_write(dir / (command + ".csv"), csv);
    write_manifest(dir, cfg, command, since(t0), {command + ".csv", "cells/"});
    std::cout << csv;
    return 0;
}

int cmd_audit(const json& cfg) {
    const auto t0 = Clock::now();
    const fs::path dir = output_dir(cfg, "audit");
    const Context ctx = make_context(cfg);
    if (ctx.base.a.order() != 2) throw ConfigError("audit needs an order-2 problem");
    const std::string norm = cfg["norms"][0].get<std::string>();
    if (!ctx.refs.count(norm)) throw GuardExceeded("audit needs a reference solution within the flat-solve guard");
    const Problem& p = ctx.by_norm.at(norm);
    Cell c = make_cells(cfg).front();
    c.solver = "aimr-greedy";
    c.norm = norm;
    GreedySchedule sched;
    sched.r_max = static_cast<int>(cfg["ranks"][0].get<Index>());
    sched.delta_m = {c.delta};
    sched.stop_tol = 0.0;
    sched.adaptive_retry = false;
    auto inner = inner_config(ctx, c, p);
    inner.projector.target_rank = 1;
    const auto r = weak_greedy_solve(p, sched, inner);
    std::vector<double> gammas;
    for (const auto& s : r.diagnostics.steps) gammas.push_back(s.gamma);
    const auto report = greedy_identities_audit(*ctx.refs.at(norm), p.rx, r.corrections, gammas);
    atomic_write(dir / "audit.json", audit_to_json(report).dump(2) + "\n");
    write_manifest(dir, cfg, "audit", since(t0), {"audit.json"});
    std::cout << json{{"status", report.ok ? "ok" : "failed"}, {"steps", report.steps.size()}, {"failure", report.failure}}
                     .dump()
              << "\n";
    return report.ok ? 0 : 3;
}

void print_error(const std::string& type, const std::string& message, int code) {
    std::cerr << json{{"error", {{"type", type}, {"message", message}}}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank ideal minimal residual solver: experiments and diagnostics"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<double> delta, rho;
    std::optional<Index> rank;
    std::optional<int> max_outer;
    std::optional<std::uint64_t> seed;
    std::string projector, solver, output;
    bool paper_scale = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "experiment config (JSON)");
        sub->add_option("--delta", delta, "residual precision");
        sub->add_option("--rank", rank, "target rank");
        sub->add_option("--rho", rho, "step size");
        sub->add_option("--projector", projector, "svd2d | als | greedy-rank-one | auto");
        sub->add_option("--max-outer", max_outer, "outer iteration cap");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("-o,--output", output, "output directory name under $IMR_OUTPUT_ROOT");
    };

    auto* mk = app.add_subcommand("make-problem", "build a benchmark problem and serialize it");
    std::string kind = "rad2d";
    int mesh_n = 10, degree = 7, modes = 8;
    bool json_tensor = false;
    mk->add_option("--kind", kind, "rad2d | highdim")->check(CLI::IsMember({"rad2d", "highdim"}));
    mk->add_option("--mesh-n", mesh_n, "elements per side");
    mk->add_option("--degree", degree, "polynomial degree (highdim)");
    mk->add_option("--modes", modes, "diffusion modes (highdim)");
    mk->add_flag("--json-tensor", json_tensor, "embed the right-hand side as JSON");
    mk->add_option("-o,--output", output, "output directory name under $IMR_OUTPUT_ROOT");

    auto* solve = app.add_subcommand("solve", "run one solver and write its solution and trace");
    add_common(solve);
    solve->add_option("--solver", solver, "solver name");
    auto* compare = app.add_subcommand("compare", "run a solver grid on one problem");
    add_common(compare);
    auto* sweep = app.add_subcommand("sweep", "delta / rank / norm sweep");
    add_common(sweep);
    sweep->add_flag("--paper-scale", paper_scale, "full-size problem and rank range (slow)");
    auto* audit = app.add_subcommand("audit", "weak greedy oracle identity audit");
    add_common(audit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what(), 2);
        return 2;
    }

    try {
        if (mk->parsed()) {
            json pj = {{"kind", kind}, {"mesh_n", mesh_n}};
            if (kind == "highdim") {
                pj["degree"] = degree;
                pj["modes"] = modes;
            }
            const char* root = std::getenv("IMR_OUTPUT_ROOT");
            const fs::path dir = (root ? fs::path(root) : fs::current_path()) /
                                 (output.empty() ? "problem-" + hex(fnv1a(pj.dump())) : output);
            return cmd_make_problem(pj, dir, json_tensor ? TensorEncoding::json : TensorEncoding::binary);
        }

        json user = config_path.empty() ? json::object() : read_json_file(config_path);
        if (sweep->parsed()) {
            if (!user.contains("norms")) user["norms"] = {"canonical", "weighted"};
            if (!user.contains("solvers")) user["solvers"] = {"aimr-greedy", "cmr-greedy", "svd-optimum"};
            if (!user.contains("ranks")) user["ranks"] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
            if (paper_scale) {
                user["problem"] = {{"kind", "rad2d"}, {"mesh_n", 40}};
                user["ranks"] = json::array();
                for (int r = 1; r <= 20; ++r) user["ranks"].push_back(r);
            }
        }
        if (delta) user["deltas"] = {*delta};
        if (rank) user["ranks"] = {*rank};
        if (rho) user["rho"] = *rho;
        if (!projector.empty()) user["projector"] = projector;
        if (max_outer) user["max_outer"] = *max_outer;
        if (seed) user["seed"] = *seed;
        if (!solver.empty()) user["solvers"] = {solver};
        if (!output.empty()) user["output"] = output;
        const json cfg = effective_config(user);

        if (solve->parsed()) return cmd_solve(cfg, "solve");
        if (compare->parsed()) return cmd_grid(cfg, "compare");
        if (sweep->parsed()) return cmd_grid(cfg, "sweep");
        if (audit->parsed()) return cmd_audit(cfg);
    } catch (const GuardExceeded& e) {
        print_error("guard_exceeded", e.what(), 4);
        return 4;
    } catch (const NumericalFailure& e) {
        print_error("numerical_failure", e.what(), 3);
        return 3;
    } catch (const ConfigError& e) {
        print_error("config_error", e.what(), 2);
        return 2;
    } catch (const DimensionMismatch& e) {
        print_error("config_error", e.what(), 2);
        return 2;
    } catch (const json::exception& e) {
        print_error("config_error", e.what(), 2);
        return 2;
    } catch (const std::exception& e) {
        print_error("numerical_failure", e.what(), 3);
        return 3;
    }
    return 0;
}
