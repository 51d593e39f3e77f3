#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/rank_one_metric.hpp"

namespace imr {

/// Metric singular value decomposition of an order-2 tensor. Term i is
/// sigma_i * left_i ⊗ right_i with left/right orthonormal in G_1 / G_2.
struct MetricSvd {
    Vector sigma;
    Matrix left;
    Matrix right;
};

/// Full (thin) decomposition. Singular values below a round-off floor are
/// dropped. Each left vector has its largest-magnitude entry positive.
MetricSvd metric_svd(const CanonicalTensor& a, const RankOneMetric& m);

/// Best rank-r approximation in the metric norm. Factor 0 carries the
/// singular values, factor 1 is G_2-orthonormal. r larger than the
/// available rank returns every nonzero term.
CanonicalTensor svd2d_project(const CanonicalTensor& a, Index r, const RankOneMetric& m);

}  // namespace imr
