#include "imr/orthopoly.hpp"

#include "imr/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace imr {

Matrix legendre_jacobi(int degree) {
    if (degree < 0) throw ConfigError("polynomial degree must be >= 0");
    Matrix j = Matrix::Zero(degree + 1, degree + 1);
    for (int k = 1; k <= degree; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        j(k - 1, k) = b;
        j(k, k - 1) = b;
    }
    return j;
}

GaussRule gauss_legendre(int n) {
    if (n < 1) throw ConfigError("quadrature needs at least one point");
    // Golub-Welsch on the Jacobi matrix of the Legendre family.
    Eigen::SelfAdjointEigenSolver<Matrix> es(legendre_jacobi(n - 1));
    GaussRule g;
    g.nodes = es.eigenvalues();
    g.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return g;
}

Matrix legendre_eval(int degree, const Vector& t) {
    Matrix v(t.size(), degree + 1);
    v.col(0).setOnes();
    if (degree >= 1) v.col(1) = std::sqrt(3.0) * t;
    for (int k = 1; k < degree; ++k) {
        const double bk = k / std::sqrt(4.0 * k * k - 1.0);
        const double bk1 = (k + 1) / std::sqrt(4.0 * (k + 1) * (k + 1) - 1.0);
        v.col(k + 1) = (t.array() * v.col(k).array() - bk * v.col(k - 1).array()) / bk1;
    }
    return v;
}

StochasticBasis StochasticBasis::legendre(double lo, double hi, int degree) {
    return piecewise_legendre(lo, hi, {}, degree);
}

StochasticBasis StochasticBasis::piecewise_legendre(double lo, double hi, const std::vector<double>& breaks,
                                                    int degree) {
    if (degree < 0) throw ConfigError("polynomial degree must be >= 0");
    if (!(hi >= lo)) throw ConfigError("random variable range is empty");
    StochasticBasis b;
    b.degree_ = degree;
    b.pieces_.push_back(lo);
    for (double x : breaks) {
        if (!(x > b.pieces_.back() && x < hi)) throw ConfigError("partition points must be increasing and interior");
        b.pieces_.push_back(x);
    }
    b.pieces_.push_back(hi);
    if (b.pieces_.size() > 2 && hi == lo) throw ConfigError("cannot partition a degenerate range");
    return b;
}

namespace {

// Probability weight of a piece; a degenerate range is a single piece of weight 1.
double piece_weight(double a, double b, double lo, double hi) { return hi > lo ? (b - a) / (hi - lo) : 1.0; }

}  // namespace

Matrix StochasticBasis::eval(const Vector& xi) const {
    const Index np = static_cast<Index>(pieces_.size()) - 1;
    const int p1 = degree_ + 1;
    Matrix v = Matrix::Zero(xi.size(), size());
    for (Index i = 0; i < xi.size(); ++i) {
        for (Index p = 0; p < np; ++p) {
            const double a = pieces_[static_cast<std::size_t>(p)];
            const double b = pieces_[static_cast<std::size_t>(p) + 1];
            const bool last = p == np - 1;
            if (xi(i) < a || xi(i) > b || (!last && xi(i) == b)) continue;
            const double t = b > a ? (2.0 * xi(i) - a - b) / (b - a) : 0.0;
            const double s = 1.0 / std::sqrt(piece_weight(a, b, lo(), hi()));
            Vector tv(1);
            tv(0) = t;
            v.block(i, p * p1, 1, p1) = s * legendre_eval(degree_, tv);
            break;
        }
    }
    return v;
}

Matrix StochasticBasis::multiplication(const std::function<double(double)>& g, int points) const {
    const GaussRule q = gauss_legendre(points);
    const Index np = static_cast<Index>(pieces_.size()) - 1;
    const int p1 = degree_ + 1;
    Matrix h = Matrix::Zero(size(), size());
    for (Index p = 0; p < np; ++p) {
        const double a = pieces_[static_cast<std::size_t>(p)];
        const double b = pieces_[static_cast<std::size_t>(p) + 1];
        const Matrix psi = legendre_eval(degree_, q.nodes);
        Matrix blk = Matrix::Zero(p1, p1);
        for (Index k = 0; k < q.nodes.size(); ++k) {
            const double xi = 0.5 * (a + b) + 0.5 * (b - a) * q.nodes(k);
            // The 1/w_p normalization cancels the piece weight w_p of the law.
            blk += (0.5 * q.weights(k) * g(xi)) * psi.row(k).transpose() * psi.row(k);
        }
        h.block(p * p1, p * p1, p1, p1) = blk;
    }
    return h;
}

Matrix StochasticBasis::multiplication_by_variable() const {
    const Index np = static_cast<Index>(pieces_.size()) - 1;
    const int p1 = degree_ + 1;
    const Matrix j = legendre_jacobi(degree_);
    Matrix h = Matrix::Zero(size(), size());
    for (Index p = 0; p < np; ++p) {
        const double a = pieces_[static_cast<std::size_t>(p)];
        const double b = pieces_[static_cast<std::size_t>(p) + 1];
        h.block(p * p1, p * p1, p1, p1) =
            0.5 * (a + b) * Matrix::Identity(p1, p1) + 0.5 * (b - a) * j;
    }
    return h;
}

Matrix StochasticBasis::gram() const {
    return multiplication([](double) { return 1.0; }, degree_ + 2);
}

Vector StochasticBasis::mean() const {
    const GaussRule q = gauss_legendre(degree_ + 2);
    const Index np = static_cast<Index>(pieces_.size()) - 1;
    const int p1 = degree_ + 1;
    Vector m = Vector::Zero(size());
    const Matrix psi = legendre_eval(degree_, q.nodes);
    for (Index p = 0; p < np; ++p) {
        const double a = pieces_[static_cast<std::size_t>(p)];
        const double b = pieces_[static_cast<std::size_t>(p) + 1];
        const double w = piece_weight(a, b, lo(), hi());
        // E[psi] = w_p * E_piece[psi_k / sqrt(w_p)]
        m.segment(p * p1, p1) = std::sqrt(w) * 0.5 * (psi.transpose() * q.weights);
    }
    return m;
}

}  // namespace imr
