#include "imr/fem_q1.hpp"

#include "imr/error.hpp"
#include "imr/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace imr {

Q1Space::Q1Space(int n) : n_(n) {
    if (n < 2) throw ConfigError("mesh needs at least 2 elements per side");
}

Vector Q1Space::node_x() const {
    Vector x(size());
    for (int j = 1; j < n_; ++j)
        for (int i = 1; i < n_; ++i) x((i - 1) + (n_ - 1) * (j - 1)) = i * h();
    return x;
}

Vector Q1Space::node_y() const {
    Vector y(size());
    for (int j = 1; j < n_; ++j)
        for (int i = 1; i < n_; ++i) y((i - 1) + (n_ - 1) * (j - 1)) = j * h();
    return y;
}

namespace {

// Local node a = 0..3 at corners (0,0), (1,0), (0,1), (1,1) of the reference square.
constexpr int kCx[4] = {0, 1, 0, 1};
constexpr int kCy[4] = {0, 0, 1, 1};

double shape(int a, double s, double t) {
    return (kCx[a] ? s : 1.0 - s) * (kCy[a] ? t : 1.0 - t);
}

// Gradient in physical coordinates for element size h.
std::array<double, 2> shape_grad(int a, double s, double t, double h) {
    const double ds = (kCx[a] ? 1.0 : -1.0) * (kCy[a] ? t : 1.0 - t);
    const double dt = (kCx[a] ? s : 1.0 - s) * (kCy[a] ? 1.0 : -1.0);
    return {ds / h, dt / h};
}

template <typename LocalFn>
SparseMatrix assemble(int n, bool all_nodes, LocalFn&& local) {
    const GaussRule g = gauss_legendre(3);
    const double h = 1.0 / n;
    auto index = [&](int i, int j) -> Index {
        if (all_nodes) return i + static_cast<Index>(n + 1) * j;
        if (i == 0 || j == 0 || i == n || j == n) return -1;
        return (i - 1) + static_cast<Index>(n - 1) * (j - 1);
    };
    const Index dim = all_nodes ? static_cast<Index>(n + 1) * (n + 1) : static_cast<Index>(n - 1) * (n - 1);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * n * 16);
    for (int ey = 0; ey < n; ++ey) {
        for (int ex = 0; ex < n; ++ex) {
            double k[4][4] = {};
            for (Index qy = 0; qy < 3; ++qy) {
                for (Index qx = 0; qx < 3; ++qx) {
                    const double s = 0.5 * (1.0 + g.nodes(qx));
                    const double t = 0.5 * (1.0 + g.nodes(qy));
                    const double w = 0.25 * g.weights(qx) * g.weights(qy) * h * h;
                    const double x = (ex + s) * h;
                    const double y = (ey + t) * h;
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b) k[a][b] += w * local(a, b, s, t, x, y, h);
                }
            }
            for (int a = 0; a < 4; ++a) {
                const Index ia = index(ex + kCx[a], ey + kCy[a]);
                if (ia < 0) continue;
                for (int b = 0; b < 4; ++b) {
                    const Index ib = index(ex + kCx[b], ey + kCy[b]);
                    if (ib < 0) continue;
                    trip.emplace_back(ia, ib, k[a][b]);
                }
            }
        }
    }
    SparseMatrix m(dim, dim);
    m.setFromTriplets(trip.begin(), trip.end());
    m.prune(0.0);
    return m;
}

// Exact int over [lo, hi] of the 1D hat function centred at node c with width h.
double hat_integral(double c, double h, double lo, double hi) {
    auto prim = [&](double x) {
        // Antiderivative of max(0, 1 - |x - c| / h), zero at c - h.
        const double u = std::clamp(x, c - h, c + h) - c;
        return u <= 0.0 ? (u + h) * (u + h) / (2.0 * h) : h - (h - u) * (h - u) / (2.0 * h);
    };
    if (hi <= lo) return 0.0;
    return prim(hi) - prim(lo);
}

}  // namespace

SparseMatrix Q1Space::stiffness(const ScalarField& kappa) const {
    return assemble(n_, false, [&](int a, int b, double s, double t, double x, double y, double h) {
        const auto ga = shape_grad(a, s, t, h);
        const auto gb = shape_grad(b, s, t, h);
        const double c = kappa ? kappa(x, y) : 1.0;
        return c * (ga[0] * gb[0] + ga[1] * gb[1]);
    });
}

SparseMatrix Q1Space::advection(const VectorField& c) const {
    return assemble(n_, false, [&](int a, int b, double s, double t, double x, double y, double h) {
        const auto gb = shape_grad(b, s, t, h);
        const auto cv = c(x, y);
        return shape(a, s, t) * (cv[0] * gb[0] + cv[1] * gb[1]);
    });
}

SparseMatrix Q1Space::mass(bool all_nodes) const {
    return assemble(n_, all_nodes, [](int a, int b, double s, double t, double, double, double) {
        return shape(a, s, t) * shape(b, s, t);
    });
}

Vector Q1Space::box_integral(const Box& box) const {
    // Q1 basis functions are products of 1D hats, so the box integral factorizes.
    Vector out(size());
    for (int j = 1; j < n_; ++j) {
        const double iy = hat_integral(j * h(), h(), box.y0, box.y1);
        for (int i = 1; i < n_; ++i) {
            out((i - 1) + (n_ - 1) * (j - 1)) = hat_integral(i * h(), h(), box.x0, box.x1) * iy;
        }
    }
    return out;
}

}  // namespace imr
