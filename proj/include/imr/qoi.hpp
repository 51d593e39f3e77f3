#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/problem.hpp"

namespace imr {

struct QoiStats {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of Q(u)(xi) = q^T u(., xi). With an orthonormal stochastic
/// basis the variance is the squared coefficient norm minus the squared mean.
QoiStats qoi_stats(const CanonicalTensor& u, const QoiSpec& qoi);

}  // namespace imr
