#include "imr/projection.hpp"

#include "imr/error.hpp"
#include "imr/svd2d.hpp"

#include <cmath>
#include <memory>

namespace imr {

const char* to_string(ProjectorKind kind) {
    switch (kind) {
        case ProjectorKind::svd2d: return "svd2d";
        case ProjectorKind::als: return "als";
        case ProjectorKind::greedy_rank_one: return "greedy-rank-one";
    }
    return "unknown";
}

ProjectorKind projector_from_string(const std::string& s) {
    if (s == "svd2d") return ProjectorKind::svd2d;
    if (s == "als") return ProjectorKind::als;
    if (s == "greedy-rank-one" || s == "greedy") return ProjectorKind::greedy_rank_one;
    throw ConfigError("unknown projector '" + s + "'");
}

void FormatSpec::validate(Index order) const {
    if (target_rank < 0) throw ConfigError("target rank must be >= 0");
    if (kind == ProjectorKind::svd2d && order != 2) throw ConfigError("svd2d projector requires order 2");
}

namespace {

SharedFactor metric_factor_matrix(const MetricFactor& g) {
    switch (g.kind()) {
        case MetricKind::identity: return std::make_shared<const FactorMatrix>(FactorMatrix::identity(g.size()));
        case MetricKind::diagonal: {
            SparseMatrix d(g.size(), g.size());
            d.reserve(Eigen::VectorXi::Constant(g.size(), 1));
            for (Index i = 0; i < g.size(); ++i) d.insert(i, i) = g.diagonal_entries()(i);
            return std::make_shared<const FactorMatrix>(FactorMatrix::from_sparse(std::move(d)));
        }
        case MetricKind::general: return std::make_shared<const FactorMatrix>(FactorMatrix::from_dense(g.gram()));
    }
    return nullptr;
}

}  // namespace

CanonicalTensor project_best(const CanonicalTensor& v, const FormatSpec& spec, const RankOneMetric& m,
                             const ProjectionConfig& cfg) {
    spec.validate(v.order());
    m.check_compatible(v);
    if (spec.kind == ProjectorKind::svd2d) return svd2d_project(v, spec.target_rank, m);
    if (v.rank() <= spec.target_rank) return v;

    // min |v - w|_m^2 = J(w) + |v|_m^2 with Q = ⊗ G_mu and f = G v.
    QuadTerm q;
    for (Index mu = 0; mu < m.order(); ++mu) q.push_back(metric_factor_matrix(m.factor(mu)));
    const KronQuadratic quad({q}, m.apply(v));

    CanonicalTensor w = CanonicalTensor::zero(v.dims());
    for (Index i = 0; i < spec.target_rank; ++i) {
        AlsConfig als = cfg.als;
        als.seed = cfg.als.seed + static_cast<std::uint64_t>(i) + 1;
        w = ct_add(w, quad.rank_one_correction(w, als));
    }
    if (spec.kind == ProjectorKind::als && spec.target_rank > 1) {
        const double vv = ct_norm(v, m);
        double prev = quad.energy(w);
        for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
            for (Index mu = 0; mu < v.order(); ++mu) w = quad.dimension_update(w, mu, cfg.update);
            const double cur = quad.energy(w);
            // Energies are |v - w|^2 - |v|^2; compare the errors themselves.
            const double e_prev = std::max(prev + vv * vv, 0.0);
            const double e_cur = std::max(cur + vv * vv, 0.0);
            prev = cur;
            if (e_prev - e_cur <= cfg.tol * std::max(e_prev, 1e-300)) break;
        }
    }
    return w;
}

}  // namespace imr
