#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/lowrank_operator.hpp"
#include "imr/rank_one_metric.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace imr {

/// Closed axis-aligned box [x0, x1] x [y0, y1].
struct Box {
    double x0 = 0.0;
    double x1 = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;

    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Spatial average over a region, contracted with a stochastic basis.
struct QoiSpec {
    Box region;
    /// q^T u_spatial = (1/|D|) * integral over D of the FE function.
    Vector qx;
    /// E[psi_j] for every stochastic dimension (dims 1..d-1).
    std::vector<Vector> stochastic_means;
    bool orthonormal = true;
};

/// A u = b with a solution metric R_X. Dimension 0 is spatial when
/// node coordinates are present.
struct Problem {
    LowRankOperator a;
    CanonicalTensor b;
    RankOneMetric rx;
    nlohmann::json meta = nlohmann::json::object();
    std::optional<QoiSpec> qoi;
    Vector node_x;
    Vector node_y;

    std::vector<Index> dims() const { return a.col_dims(); }
    /// Throws when operator, right-hand side and metric disagree.
    void validate() const;
};

}  // namespace imr
