#include "imr/rank_one_metric.hpp"

#include "imr/canonical_tensor.hpp"
#include "imr/error.hpp"

#include <string>

namespace imr {

const char* to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::identity: return "identity";
        case MetricKind::diagonal: return "diagonal";
        case MetricKind::general: return "general";
    }
    return "unknown";
}

MetricFactor MetricFactor::identity(Index n) {
    MetricFactor f;
    f.kind_ = MetricKind::identity;
    f.n_ = n;
    return f;
}

MetricFactor MetricFactor::diagonal(const Vector& gram_diagonal) {
    if (!(gram_diagonal.array() > 0.0).all() || !gram_diagonal.allFinite()) {
        throw NumericalFailure("diagonal metric entries must be positive and finite");
    }
    MetricFactor f;
    f.kind_ = MetricKind::diagonal;
    f.n_ = gram_diagonal.size();
    f.diag_ = gram_diagonal;
    f.sqrt_diag_ = gram_diagonal.cwiseSqrt();
    return f;
}

MetricFactor MetricFactor::general(const Matrix& gram) {
    if (gram.rows() != gram.cols()) throw DimensionMismatch("metric Gram matrix must be square");
    const double scale = gram.cwiseAbs().maxCoeff();
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw NumericalFailure("metric Gram matrix must be symmetric");
    }
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("metric Gram matrix is not positive definite");
    }
    MetricFactor f;
    f.kind_ = MetricKind::general;
    f.n_ = gram.rows();
    f.gram_ = gram;
    f.chol_lower_ = llt.matrixL();
    return f;
}

Matrix MetricFactor::apply(const Matrix& x) const {
    if (x.rows() != n_) throw DimensionMismatch("metric apply: size mismatch");
    switch (kind_) {
        case MetricKind::identity: return x;
        case MetricKind::diagonal: return diag_.asDiagonal() * x;
        case MetricKind::general: return gram_ * x;
    }
    return x;
}

Matrix MetricFactor::solve(const Matrix& x) const {
    if (x.rows() != n_) throw DimensionMismatch("metric solve: size mismatch");
    switch (kind_) {
        case MetricKind::identity: return x;
        case MetricKind::diagonal: return diag_.cwiseInverse().asDiagonal() * x;
        case MetricKind::general: {
            Matrix y = chol_lower_.triangularView<Eigen::Lower>().solve(x);
            return chol_lower_.transpose().triangularView<Eigen::Upper>().solve(y);
        }
    }
    return x;
}

Matrix MetricFactor::sqrt_transpose_apply(const Matrix& x) const {
    switch (kind_) {
        case MetricKind::identity: return x;
        case MetricKind::diagonal: return sqrt_diag_.asDiagonal() * x;
        case MetricKind::general: return chol_lower_.transpose().triangularView<Eigen::Upper>() * x;
    }
    return x;
}

Matrix MetricFactor::sqrt_transpose_solve(const Matrix& x) const {
    switch (kind_) {
        case MetricKind::identity: return x;
        case MetricKind::diagonal: return sqrt_diag_.cwiseInverse().asDiagonal() * x;
        case MetricKind::general: return chol_lower_.transpose().triangularView<Eigen::Upper>().solve(x);
    }
    return x;
}

Matrix MetricFactor::gram() const {
    switch (kind_) {
        case MetricKind::identity: return Matrix::Identity(n_, n_);
        case MetricKind::diagonal: return diag_.asDiagonal();
        case MetricKind::general: return gram_;
    }
    return {};
}

RankOneMetric::RankOneMetric(std::vector<MetricFactor> factors) : factors_(std::move(factors)) {
    if (factors_.size() < 2) throw DimensionMismatch("metric needs order >= 2");
}

RankOneMetric RankOneMetric::identity(const std::vector<Index>& dims) {
    std::vector<MetricFactor> f;
    for (Index n : dims) f.push_back(MetricFactor::identity(n));
    return RankOneMetric(std::move(f));
}

std::vector<Index> RankOneMetric::dims() const {
    std::vector<Index> d;
    for (const auto& f : factors_) d.push_back(f.size());
    return d;
}

MetricKind RankOneMetric::kind() const {
    MetricKind k = MetricKind::identity;
    for (const auto& f : factors_) {
        if (static_cast<int>(f.kind()) > static_cast<int>(k)) k = f.kind();
    }
    return k;
}

void RankOneMetric::check_compatible(const CanonicalTensor& v) const {
    if (v.order() != order()) throw DimensionMismatch("metric/tensor order mismatch");
    for (Index mu = 0; mu < order(); ++mu) {
        if (v.dim(mu) != factor(mu).size()) {
            throw DimensionMismatch("metric/tensor dimension " + std::to_string(mu) + " mismatch");
        }
    }
}

CanonicalTensor RankOneMetric::apply(const CanonicalTensor& v) const {
    check_compatible(v);
    std::vector<Matrix> f;
    for (Index mu = 0; mu < order(); ++mu) f.push_back(factor(mu).apply(v.factor(mu)));
    return CanonicalTensor(std::move(f));
}

CanonicalTensor metric_solve(const RankOneMetric& m, const CanonicalTensor& v) {
    m.check_compatible(v);
    std::vector<Matrix> f;
    for (Index mu = 0; mu < m.order(); ++mu) f.push_back(m.factor(mu).solve(v.factor(mu)));
    return CanonicalTensor(std::move(f));
}

}  // namespace imr
