#include "imr/qoi.hpp"

#include "imr/error.hpp"

namespace imr {

QoiStats qoi_stats(const CanonicalTensor& u, const QoiSpec& qoi) {
    if (!qoi.orthonormal) throw ConfigError("qoi_stats requires an orthonormal stochastic basis");
    if (static_cast<Index>(qoi.stochastic_means.size()) + 1 != u.order())
        throw DimensionMismatch("qoi: one mean vector per stochastic dimension is required");
    if (qoi.qx.size() != u.dims()[0]) throw DimensionMismatch("qoi: spatial functional size mismatch");
    QoiStats out;
    if (u.rank() == 0) return out;

    const Vector q = u.factor(0).transpose() * qoi.qx;
    Vector mean_terms = q;
    Matrix second = q * q.transpose();
    for (Index mu = 1; mu < u.order(); ++mu) {
        const Vector& m = qoi.stochastic_means[static_cast<std::size_t>(mu - 1)];
        if (m.size() != u.dims()[mu]) throw DimensionMismatch("qoi: stochastic mean size mismatch");
        mean_terms.array() *= (u.factor(mu).transpose() * m).array();
        second.array() *= (u.factor(mu).transpose() * u.factor(mu)).array();
    }
    out.mean = mean_terms.sum();
    out.variance = std::max(second.sum() - out.mean * out.mean, 0.0);
    return out;
}

}  // namespace imr
