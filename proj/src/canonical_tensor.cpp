#include "imr/canonical_tensor.hpp"

#include "imr/error.hpp"
#include "imr/rank_one_metric.hpp"

#include <cmath>
#include <random>
#include <string>

namespace imr {

namespace {

void check_same_shape(const CanonicalTensor& a, const CanonicalTensor& b, const char* what) {
    if (a.order() != b.order()) {
        throw DimensionMismatch(std::string(what) + ": tensor orders differ");
    }
    for (Index mu = 0; mu < a.order(); ++mu) {
        if (a.dim(mu) != b.dim(mu)) {
            throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(mu) + " differs");
        }
    }
}

}  // namespace

CanonicalTensor::CanonicalTensor(std::vector<Matrix> factors) : factors_(std::move(factors)) {
    if (factors_.size() < 2) throw DimensionMismatch("canonical tensor needs order >= 2");
    const Index r = factors_.front().cols();
    for (const auto& f : factors_) {
        if (f.cols() != r) throw DimensionMismatch("factor matrices must share the column count");
        if (f.rows() < 1) throw DimensionMismatch("dimension sizes must be positive");
    }
    if (!is_finite()) throw NumericalFailure("canonical tensor factors contain NaN or Inf");
}

CanonicalTensor CanonicalTensor::zero(const std::vector<Index>& dims) {
    std::vector<Matrix> f;
    f.reserve(dims.size());
    for (Index n : dims) f.emplace_back(n, 0);
    return CanonicalTensor(std::move(f));
}

CanonicalTensor CanonicalTensor::rank_one(const std::vector<Vector>& vectors) {
    std::vector<Matrix> f;
    f.reserve(vectors.size());
    for (const auto& v : vectors) f.emplace_back(v);
    return CanonicalTensor(std::move(f));
}

std::vector<Index> CanonicalTensor::dims() const {
    std::vector<Index> d;
    d.reserve(factors_.size());
    for (const auto& f : factors_) d.push_back(f.rows());
    return d;
}

double CanonicalTensor::full_size() const {
    double s = 1.0;
    for (const auto& f : factors_) s *= static_cast<double>(f.rows());
    return s;
}

CanonicalTensor CanonicalTensor::term(Index i) const {
    return terms(i, 1);
}

CanonicalTensor CanonicalTensor::terms(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > rank()) {
        throw DimensionMismatch("term range out of bounds");
    }
    std::vector<Matrix> f;
    f.reserve(factors_.size());
    for (const auto& m : factors_) f.emplace_back(m.middleCols(first, count));
    return CanonicalTensor(std::move(f));
}

bool CanonicalTensor::is_finite() const {
    for (const auto& f : factors_) {
        if (!f.allFinite()) return false;
    }
    return true;
}

CanonicalTensor ct_add(const CanonicalTensor& a, const CanonicalTensor& b) {
    check_same_shape(a, b, "ct_add");
    std::vector<Matrix> f;
    f.reserve(static_cast<std::size_t>(a.order()));
    for (Index mu = 0; mu < a.order(); ++mu) {
        Matrix m(a.dim(mu), a.rank() + b.rank());
        m << a.factor(mu), b.factor(mu);
        f.push_back(std::move(m));
    }
    return CanonicalTensor(std::move(f));
}

CanonicalTensor ct_scale(const CanonicalTensor& a, double s) {
    CanonicalTensor out = a;
    if (out.order() > 0) out.factor(0) *= s;
    return out;
}

CanonicalTensor ct_sub(const CanonicalTensor& a, const CanonicalTensor& b) {
    return ct_add(a, ct_scale(b, -1.0));
}

Matrix ct_term_products(const CanonicalTensor& a, const CanonicalTensor& b) {
    check_same_shape(a, b, "ct_term_products");
    Matrix prod = Matrix::Ones(a.rank(), b.rank());
    for (Index mu = 0; mu < a.order(); ++mu) {
        prod.array() *= (a.factor(mu).transpose() * b.factor(mu)).array();
    }
    return prod;
}

double ct_dot(const CanonicalTensor& a, const CanonicalTensor& b) {
    return ct_term_products(a, b).sum();
}

double ct_inner(const CanonicalTensor& a, const CanonicalTensor& b, const RankOneMetric& m) {
    check_same_shape(a, b, "ct_inner");
    m.check_compatible(a);
    Matrix prod = Matrix::Ones(a.rank(), b.rank());
    for (Index mu = 0; mu < a.order(); ++mu) {
        prod.array() *= (a.factor(mu).transpose() * m.factor(mu).apply(b.factor(mu))).array();
    }
    return prod.sum();
}

namespace {

double checked_sqrt(double v, double scale) {
    if (v >= 0.0) return std::sqrt(v);
    if (-v <= 1e-12 * std::max(scale, 1e-300)) return 0.0;
    throw NumericalFailure("negative squared norm: metric is not positive definite");
}

}  // namespace

double ct_norm(const CanonicalTensor& a, const RankOneMetric& m) {
    m.check_compatible(a);
    Matrix prod = Matrix::Ones(a.rank(), a.rank());
    for (Index mu = 0; mu < a.order(); ++mu) {
        prod.array() *= (a.factor(mu).transpose() * m.factor(mu).apply(a.factor(mu))).array();
    }
    return checked_sqrt(prod.sum(), prod.cwiseAbs().sum());
}

double ct_norm(const CanonicalTensor& a) {
    const Matrix prod = ct_term_products(a, a);
    return checked_sqrt(prod.sum(), prod.cwiseAbs().sum());
}

Vector ct_to_dense(const CanonicalTensor& a, double guard) {
    if (a.full_size() > guard) {
        throw GuardExceeded("ct_to_dense: " + std::to_string(a.full_size()) + " entries exceed the guard");
    }
    const auto total = static_cast<Index>(a.full_size());
    Vector out = Vector::Zero(total);
    // Build each term by successive Kronecker expansion, first index fastest.
    for (Index i = 0; i < a.rank(); ++i) {
        Vector cur = a.factor(0).col(i);
        for (Index mu = 1; mu < a.order(); ++mu) {
            const auto& col = a.factor(mu).col(i);
            Vector next(cur.size() * col.size());
            for (Index j = 0; j < col.size(); ++j) {
                next.segment(j * cur.size(), cur.size()) = col(j) * cur;
            }
            cur.swap(next);
        }
        out += cur;
    }
    return out;
}

Matrix ct_to_matrix(const CanonicalTensor& a) {
    if (a.order() != 2) throw DimensionMismatch("ct_to_matrix requires an order-2 tensor");
    return a.factor(0) * a.factor(1).transpose();
}

CanonicalTensor ct_from_matrix(const Matrix& m) {
    return CanonicalTensor({m, Matrix::Identity(m.cols(), m.cols())});
}

CanonicalTensor ct_from_dense(const std::vector<Index>& dims, const Vector& data) {
    if (dims.size() < 2) throw DimensionMismatch("ct_from_dense: order must be >= 2");
    Index rest = 1;
    for (std::size_t mu = 1; mu < dims.size(); ++mu) rest *= dims[mu];
    if (dims[0] * rest != data.size()) throw DimensionMismatch("ct_from_dense: data size does not match dims");
    std::vector<Matrix> f;
    f.push_back(Eigen::Map<const Matrix>(data.data(), dims[0], rest));
    // Column c of the unfolding is the multi-index (i_2, ..., i_d), i_2 fastest.
    for (std::size_t mu = 1; mu < dims.size(); ++mu) {
        Matrix e = Matrix::Zero(dims[mu], rest);
        Index stride = 1;
        for (std::size_t nu = 1; nu < mu; ++nu) stride *= dims[nu];
        for (Index c = 0; c < rest; ++c) e((c / stride) % dims[mu], c) = 1.0;
        f.push_back(std::move(e));
    }
    return CanonicalTensor(std::move(f));
}

CanonicalTensor ct_random(const std::vector<Index>& dims, Index rank, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Matrix> f;
    for (Index n : dims) {
        Matrix m(n, rank);
        for (Index j = 0; j < rank; ++j) {
            for (Index i = 0; i < n; ++i) m(i, j) = normal(gen);
        }
        f.push_back(std::move(m));
    }
    return CanonicalTensor(std::move(f));
}

}  // namespace imr
