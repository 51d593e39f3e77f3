#include "imr/problems.hpp"

#include "imr/cmr.hpp"
#include "imr/error.hpp"
#include "imr/fem_q1.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <numbers>
#include <string>

namespace imr {

void Problem::validate() const {
    const auto dims = a.col_dims();
    if (a.row_dims() != dims) throw DimensionMismatch("problem operator must be square in every dimension");
    if (b.order() != a.order()) throw DimensionMismatch("right-hand side order does not match the operator");
    if (b.dims() != dims) throw DimensionMismatch("right-hand side dims do not match the operator");
    rx.check_compatible(b);
}

Vector StochasticModel::sample(std::mt19937_64& gen) const {
    Vector xi(static_cast<Index>(variables.size()));
    for (std::size_t v = 0; v < variables.size(); ++v) {
        std::uniform_real_distribution<double> u(variables[v].lo(), variables[v].hi());
        xi(static_cast<Index>(v)) = variables[v].hi() > variables[v].lo() ? u(gen) : variables[v].lo();
    }
    return xi;
}

Vector StochasticModel::basis_at(Index mu, const Vector& xi) const {
    const auto& vars = dim_variables.at(static_cast<std::size_t>(mu - 1));
    Vector out = Vector::Ones(1);
    for (int v : vars) {
        Vector x(1);
        x(0) = xi(v);
        const Vector psi = variables[static_cast<std::size_t>(v)].eval(x).row(0).transpose();
        // Earlier variables run fastest: kron(psi_new, psi_so_far).
        Vector next(out.size() * psi.size());
        for (Index j = 0; j < psi.size(); ++j) next.segment(j * out.size(), out.size()) = psi(j) * out;
        out.swap(next);
    }
    return out;
}

Vector StochasticModel::evaluate(const CanonicalTensor& u, const Vector& xi) const {
    Vector coeff = Vector::Ones(u.rank());
    for (Index mu = 1; mu < u.order(); ++mu) coeff.array() *= (u.factor(mu).transpose() * basis_at(mu, xi)).array();
    return u.factor(0) * coeff;
}

namespace {

FactorMatrix sparse_factor(const Matrix& m) {
    SparseMatrix s = m.sparseView(1e-300, 1.0);
    return FactorMatrix::from_sparse(std::move(s));
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix k = Eigen::kroneckerProduct(a, b);
    return k;
}

}  // namespace

StochasticProblem build_rad2d(int mesh_n, const Rad2dSpec& spec) {
    if (mesh_n < 4) throw ConfigError("rad2d: mesh_n must be >= 4");
    const Q1Space space(mesh_n);
    const SparseMatrix d = space.stiffness();
    const SparseMatrix c = space.advection([](double x, double y) { return std::array<double, 2>{y - 0.5, 0.5 - x}; });
    const SparseMatrix r = space.mass();

    const auto b1 = StochasticBasis::piecewise_legendre(spec.xi1_lo, spec.xi1_hi, spec.xi1_breaks, spec.xi1_degree);
    const auto b2 = StochasticBasis::legendre(spec.xi2_lo, spec.xi2_hi, spec.xi2_degree);
    const Index p1 = b1.size();
    const Index p2 = b2.size();
    const Matrix h1 = b1.multiplication_by_variable();
    const Matrix h2 = b2.multiplication([](double x) { return std::exp(x); }, 2 * spec.xi2_degree + 8);

    const Matrix hxi1 = kron(Matrix::Identity(p2, p2), h1);
    const Matrix hxi2 = kron(h2, Matrix::Identity(p1, p1));
    const Index p = p1 * p2;

    std::vector<LowRankOperator::Term> terms;
    terms.push_back({FactorMatrix::from_sparse(d), FactorMatrix::identity(p)});
    terms.push_back({FactorMatrix::from_sparse(c), sparse_factor(hxi1)});
    terms.push_back({FactorMatrix::from_sparse(r), sparse_factor(hxi2)});

    const Vector bx = space.box_integral(spec.omega1) - space.box_integral(spec.omega2);
    const Vector m1 = b1.mean();
    const Vector m2 = b2.mean();
    const Vector bxi = kron(m2, m1);

    StochasticProblem sp;
    Problem& pr = sp.problem;
    pr.a = LowRankOperator(std::move(terms));
    pr.b = CanonicalTensor::rank_one({bx, bxi});
    pr.rx = RankOneMetric::identity({space.size(), p});
    pr.node_x = space.node_x();
    pr.node_y = space.node_y();
    QoiSpec q;
    q.region = spec.qoi_region;
    q.qx = space.box_integral(spec.qoi_region) / spec.qoi_region.area();
    q.stochastic_means = {bxi};
    pr.qoi = q;
    pr.meta = {{"kind", "rad2d"},
               {"mesh_n", mesh_n},
               {"N", space.size()},
               {"P", p},
               {"xi1", {{"lo", spec.xi1_lo}, {"hi", spec.xi1_hi}, {"breaks", spec.xi1_breaks}, {"degree", spec.xi1_degree}}},
               {"xi2", {{"lo", spec.xi2_lo}, {"hi", spec.xi2_hi}, {"degree", spec.xi2_degree}}},
               {"operator_rank", 3}};

    sp.model.variables = {b1, b2};
    sp.model.dim_variables = {{0, 1}};
    sp.model.term_coefficient = {[](const Vector&) { return 1.0; }, [](const Vector& xi) { return xi(0); },
                                 [](const Vector& xi) { return std::exp(xi(1)); }};
    sp.spatial_norm = d;
    return sp;
}

StochasticProblem build_highdim_diffusion(int mesh_n, const HighdimSpec& spec) {
    if (mesh_n < 4) throw ConfigError("highdim: mesh_n must be >= 4");
    if (spec.modes < 0 || spec.modes > 8) throw ConfigError("highdim: modes must lie in 0..8");
    if (spec.degree < 0) throw ConfigError("highdim: degree must be >= 0");
    const Q1Space space(mesh_n);
    constexpr double pi = std::numbers::pi;
    const std::vector<ScalarField> kappa = {
        [](double x, double) { return std::cos(pi * x); },
        [](double, double y) { return std::cos(pi * y); },
        [](double x, double) { return std::sin(pi * x); },
        [](double, double y) { return std::sin(pi * y); },
        [](double x, double y) { return std::cos(pi * x) * std::cos(pi * y); },
        [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); },
        [](double x, double y) { return std::cos(pi * x) * std::sin(pi * y); },
        [](double x, double y) { return std::sin(pi * x) * std::cos(pi * y); },
    };

    std::vector<StochasticBasis> vars;
    vars.push_back(StochasticBasis::legendre(spec.xi0_lo, spec.xi0_hi, spec.degree));
    for (int i = 0; i < spec.modes; ++i) vars.push_back(StochasticBasis::legendre(-1.0, 1.0, spec.degree));
    const Index ps = spec.degree + 1;
    const Index d = 1 + static_cast<Index>(vars.size());

    StochasticProblem sp;
    auto identity_term = [&](const SparseMatrix& spatial) {
        LowRankOperator::Term t{FactorMatrix::from_sparse(spatial)};
        for (Index mu = 1; mu < d; ++mu) t.push_back(FactorMatrix::identity(ps));
        return t;
    };
    std::vector<LowRankOperator::Term> terms;
    terms.push_back(identity_term(spec.kappa0 * space.stiffness()));
    sp.model.term_coefficient.push_back([](const Vector&) { return 1.0; });
    if (spec.mode_scale != 0.0) {
        for (int i = 0; i < spec.modes; ++i) {
            auto t = identity_term(spec.mode_scale * space.stiffness(kappa[static_cast<std::size_t>(i)]));
            t[static_cast<std::size_t>(2 + i)] = sparse_factor(vars[static_cast<std::size_t>(1 + i)].multiplication_by_variable());
            terms.push_back(std::move(t));
            const double scale = spec.mode_scale;
            sp.model.term_coefficient.push_back([i, scale](const Vector& xi) { return scale * xi(1 + i); });
        }
    }
    const bool advection = !(spec.xi0_lo == 0.0 && spec.xi0_hi == 0.0);
    if (advection) {
        auto t = identity_term(space.advection([](double x, double y) { return std::array<double, 2>{y - 0.5, 0.5 - x}; }));
        t[1] = sparse_factor(vars[0].multiplication_by_variable());
        terms.push_back(std::move(t));
        sp.model.term_coefficient.push_back([](const Vector& xi) { return xi(0); });
    }

    std::vector<Vector> bvec{space.box_integral(spec.source1) - space.box_integral(spec.source2)};
    std::vector<Vector> means;
    for (const auto& v : vars) {
        bvec.push_back(v.mean());
        means.push_back(v.mean());
    }

    Problem& pr = sp.problem;
    pr.a = LowRankOperator(std::move(terms));
    pr.b = CanonicalTensor::rank_one(bvec);
    std::vector<Index> dims{space.size()};
    for (Index mu = 1; mu < d; ++mu) dims.push_back(ps);
    pr.rx = RankOneMetric::identity(dims);
    pr.node_x = space.node_x();
    pr.node_y = space.node_y();
    QoiSpec q;
    q.region = spec.qoi_region;
    q.qx = space.box_integral(spec.qoi_region) / spec.qoi_region.area();
    q.stochastic_means = means;
    pr.qoi = q;
    pr.meta = {{"kind", "highdim"},
               {"mesh_n", mesh_n},
               {"N", space.size()},
               {"degree", spec.degree},
               {"modes", spec.modes},
               {"kappa0", spec.kappa0},
               {"mode_scale", spec.mode_scale},
               {"xi0", {{"lo", spec.xi0_lo}, {"hi", spec.xi0_hi}}},
               {"operator_rank", pr.a.rank()}};

    sp.model.variables = vars;
    for (Index mu = 1; mu < d; ++mu) sp.model.dim_variables.push_back({static_cast<int>(mu - 1)});
    sp.spatial_norm = space.stiffness();
    return sp;
}

RankOneMetric build_weighted_metric(const Problem& problem, const Box& region, double weight) {
    if (!(weight > 0.0)) throw ConfigError("weighted metric: weight must be positive");
    if (problem.node_x.size() == 0) throw ConfigError("weighted metric: problem has no spatial nodes");
    Vector g = Vector::Ones(problem.node_x.size());
    Index inside = 0;
    for (Index i = 0; i < g.size(); ++i) {
        if (region.contains(problem.node_x(i), problem.node_y(i))) {
            g(i) = weight * weight;
            ++inside;
        }
    }
    if (inside == 0) throw ConfigError("weighted metric: no node lies in the region");
    std::vector<MetricFactor> f;
    f.push_back(weight == 1.0 ? MetricFactor::identity(g.size()) : MetricFactor::diagonal(g));
    const auto dims = problem.dims();
    for (std::size_t mu = 1; mu < dims.size(); ++mu) f.push_back(MetricFactor::identity(dims[mu]));
    return RankOneMetric(std::move(f));
}

std::shared_ptr<ReferenceSolution> reference_solve(const Problem& problem, double guard) {
    problem.validate();
    return std::make_shared<ReferenceSolution>(problem, guard);
}

Vector solve_at_sample(const StochasticProblem& sp, const Vector& xi) {
    const Problem& pr = sp.problem;
    const Index n = pr.a.col_dims()[0];
    SparseMatrix a(n, n);
    for (Index t = 0; t < pr.a.rank(); ++t) {
        a += sp.model.term_coefficient[static_cast<std::size_t>(t)](xi) * pr.a.factor(t, 0).sparse();
    }
    const Vector b = sp.model.evaluate(pr.b, xi);
    Eigen::SparseLU<SparseMatrix> lu(a);
    if (lu.info() != Eigen::Success) throw NumericalFailure("sample system factorization failed");
    return lu.solve(b);
}

McEstimate mc_relative_error(const StochasticProblem& sp, const std::function<Vector(const Vector&)>& exact_at,
                             const CanonicalTensor& u_ref, double target_rsd, std::uint64_t seed, int min_samples,
                             int max_samples) {
    std::mt19937_64 gen(seed);
    const SparseMatrix& v = sp.spatial_norm;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    McEstimate out;
    for (int k = 1; k <= max_samples; ++k) {
        const Vector xi = sp.model.sample(gen);
        const Vector u = exact_at(xi);
        const Vector e = u - sp.model.evaluate(u_ref, xi);
        const double a = e.dot(v * e);
        const double b = u.dot(v * u);
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
        out.samples = k;
        if (k < std::max(min_samples, 2)) continue;
        const double kk = k;
        const double ma = sa / kk, mb = sb / kk;
        out.rel_error = mb > 0 ? std::sqrt(std::max(ma / mb, 0.0)) : 0.0;
        if (!(ma > 0.0)) {
            out.rel_std = 0.0;
            break;
        }
        // Delta method on the ratio of means, halved for the square root.
        const double va = (saa / kk - ma * ma) * kk / (kk - 1);
        const double vb = (sbb / kk - mb * mb) * kk / (kk - 1);
        const double cab = (sab / kk - ma * mb) * kk / (kk - 1);
        const double rv = (va / (ma * ma) + vb / (mb * mb) - 2.0 * cab / (ma * mb)) / kk;
        out.rel_std = 0.5 * std::sqrt(std::max(rv, 0.0));
        if (out.rel_std <= target_rsd) break;
    }
    return out;
}

SurrogateReference surrogate_reference(const StochasticProblem& sp, const std::function<Vector(const Vector&)>& exact_at,
                                       double tol, int max_rank, std::uint64_t seed, double target_rsd,
                                       int check_every) {
    const Problem& pr = sp.problem;
    pr.validate();
    const KronQuadratic quad = cmr_quadratic(pr);
    SurrogateReference out;
    out.u = CanonicalTensor::zero(pr.dims());
    for (int r = 1; r <= max_rank; ++r) {
        AlsConfig als;
        als.seed = seed + static_cast<std::uint64_t>(r);
        out.u = ct_add(out.u, quad.rank_one_correction(out.u, als));
        for (Index mu = 1; mu < pr.a.order(); ++mu) out.u = quad.dimension_update(out.u, mu, UpdateConfig{});
        if (r % check_every == 0 || r == max_rank) {
            out.estimate = mc_relative_error(sp, exact_at, out.u, target_rsd, seed ^ 0x9e3779b97f4a7c15ULL);
            if (out.estimate.rel_error < tol) break;
        }
    }
    return out;
}

}  // namespace imr
