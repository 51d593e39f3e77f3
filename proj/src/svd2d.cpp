#include "imr/svd2d.hpp"

#include "imr/error.hpp"

#include <algorithm>
#include <limits>

namespace imr {

namespace {

// Orthonormal basis and triangular factor of a thin QR of x (n x k).
void thin_qr(const Matrix& x, Matrix& q, Matrix& r) {
    const Index k = std::min(x.rows(), x.cols());
    Eigen::HouseholderQR<Matrix> qr(x);
    q = qr.householderQ() * Matrix::Identity(x.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace

MetricSvd metric_svd(const CanonicalTensor& a, const RankOneMetric& m) {
    if (a.order() != 2) throw DimensionMismatch("svd2d requires an order-2 tensor");
    m.check_compatible(a);
    MetricSvd out;
    if (a.rank() == 0) {
        out.sigma.resize(0);
        out.left.resize(a.dim(0), 0);
        out.right.resize(a.dim(1), 0);
        return out;
    }
    Matrix q1, r1, q2, r2;
    thin_qr(m.factor(0).sqrt_transpose_apply(a.factor(0)), q1, r1);
    thin_qr(m.factor(1).sqrt_transpose_apply(a.factor(1)), q2, r2);
    const Matrix core = r1 * r2.transpose();
    Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);

    const Vector& s = svd.singularValues();
    const double floor = s.size() > 0
        ? s(0) * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.dim(0), a.dim(1)))
        : 0.0;
    Index keep = 0;
    while (keep < s.size() && s(keep) > floor && s(keep) > 0.0) ++keep;

    out.sigma = s.head(keep);
    out.left = m.factor(0).sqrt_transpose_solve(q1 * svd.matrixU().leftCols(keep));
    out.right = m.factor(1).sqrt_transpose_solve(q2 * svd.matrixV().leftCols(keep));
    for (Index j = 0; j < keep; ++j) {
        Index imax = 0;
        double vmax = -1.0;
        for (Index i = 0; i < out.left.rows(); ++i) {
            const double v = std::abs(out.left(i, j));
            if (v > vmax) {
                vmax = v;
                imax = i;
            }
        }
        if (out.left(imax, j) < 0.0) {
            out.left.col(j) *= -1.0;
            out.right.col(j) *= -1.0;
        }
    }
    return out;
}

CanonicalTensor svd2d_project(const CanonicalTensor& a, Index r, const RankOneMetric& m) {
    if (r < 0) throw DimensionMismatch("svd2d_project: negative rank");
    const MetricSvd svd = metric_svd(a, m);
    const Index k = std::min<Index>(r, svd.sigma.size());
    Matrix left = svd.left.leftCols(k) * svd.sigma.head(k).asDiagonal();
    return CanonicalTensor({std::move(left), svd.right.leftCols(k)});
}

}  // namespace imr
