#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/kron_quadratic.hpp"
#include "imr/rank_one_metric.hpp"

#include <string>

namespace imr {

enum class ProjectorKind { svd2d, als, greedy_rank_one };

const char* to_string(ProjectorKind kind);
ProjectorKind projector_from_string(const std::string& s);

/// Target subset R_r and the map used to (quasi-)project onto it.
struct FormatSpec {
    Index target_rank = 1;
    ProjectorKind kind = ProjectorKind::svd2d;

    void validate(Index order) const;
};

struct ProjectionConfig {
    AlsConfig als;
    UpdateConfig update;
    /// Cyclic dimension-update sweeps after the greedy start (als only).
    int max_sweeps = 20;
    /// Relative change of |v - w|^2 between sweeps that ends them.
    double tol = 1e-10;
};

/// Approximation of v in R_r, best in the metric for svd2d and an ALS
/// heuristic otherwise. The result has rank <= spec.target_rank.
CanonicalTensor project_best(const CanonicalTensor& v, const FormatSpec& spec, const RankOneMetric& m,
                             const ProjectionConfig& cfg = {});

}  // namespace imr
