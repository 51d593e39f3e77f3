#include "oracles.hpp"

#include "imr/canonical_tensor.hpp"
#include "imr/error.hpp"
#include "imr/rank_one_metric.hpp"
#include "imr/serialization.hpp"
#include "imr/svd2d.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace imr;

namespace {

Vector positive_weights(Index n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.5, 4.0);
    Vector w(n);
    for (Index i = 0; i < n; ++i) w(i) = u(gen);
    return w;
}

Matrix random_spd(Index n, std::uint64_t seed) {
    const CanonicalTensor t = ct_random({n, n}, n, seed);
    const Matrix b = t.factor(0);
    return b * b.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

}  // namespace

TEST(CanonicalTensor, RejectsMismatchedColumnCounts) {
    EXPECT_THROW(CanonicalTensor({Matrix::Ones(3, 2), Matrix::Ones(4, 1)}), DimensionMismatch);
    EXPECT_THROW(CanonicalTensor({Matrix::Ones(3, 2)}), DimensionMismatch);
}

TEST(CanonicalTensor, RejectsNonFiniteEntries) {
    Matrix a = Matrix::Ones(2, 1);
    a(1, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(CanonicalTensor({a, Matrix::Ones(2, 1)}), Error);
}

TEST(CanonicalTensor, ZeroTensorHasRankZero) {
    const auto z = CanonicalTensor::zero({3, 4, 2});
    EXPECT_EQ(z.rank(), 0);
    EXPECT_EQ(z.dims(), (std::vector<Index>{3, 4, 2}));
    EXPECT_TRUE(ct_to_dense(z).isZero(0.0));
}

TEST(CtAdd, ZeroIsAdditiveIdentity) {
    const auto a = ct_random({3, 4}, 2, 1);
    const auto s = ct_add(a, CanonicalTensor::zero({3, 4}));
    ASSERT_EQ(s.rank(), 2);
    EXPECT_EQ(s.factor(0), a.factor(0));
    EXPECT_EQ(s.factor(1), a.factor(1));
}

TEST(CtAdd, RankOnePlusNegativeCancels) {
    const auto a = ct_random({3, 5}, 1, 2);
    const auto s = ct_add(a, ct_scale(a, -1.0));
    EXPECT_EQ(s.rank(), 2);
    EXPECT_LE(ct_to_dense(s).norm(), 1e-15);
}

TEST(CtAdd, MatchesDenseSumOrderThree) {
    const auto a = ct_random({4, 3, 2}, 2, 3);
    const auto b = ct_random({4, 3, 2}, 3, 4);
    const auto s = ct_add(a, b);
    EXPECT_EQ(s.rank(), 5);
    const Vector want = oracle::dense(a) + oracle::dense(b);
    EXPECT_LE((ct_to_dense(s) - want).norm(), 1e-14 * want.norm());
}

TEST(CtAdd, RejectsDimensionMismatch) {
    EXPECT_THROW(ct_add(ct_random({3, 4}, 1, 1), ct_random({4, 3}, 1, 1)), DimensionMismatch);
}

TEST(CtInner, IdenticalRankOneIsProductOfNorms) {
    Vector u(3), v(2);
    u << 1, 2, 2;
    v << 3, 4;
    const auto a = CanonicalTensor::rank_one({u, v});
    EXPECT_NEAR(ct_inner(a, a, RankOneMetric::identity({3, 2})), 9.0 * 25.0, 1e-12);
}

TEST(CtInner, OrthogonalFirstFactorsGiveZero) {
    Vector u1(2), u2(2), v(3);
    u1 << 1, 0;
    u2 << 0, 1;
    v << 1, 2, 3;
    EXPECT_EQ(ct_inner(CanonicalTensor::rank_one({u1, v}), CanonicalTensor::rank_one({u2, v}),
                       RankOneMetric::identity({2, 3})),
              0.0);
}

TEST(CtInner, DiagonalMetricMatchesDenseWeightedDot) {
    const std::vector<Index> dims{4, 3, 2};
    const auto a = ct_random(dims, 2, 5);
    const auto b = ct_random(dims, 2, 6);
    std::vector<MetricFactor> f;
    std::vector<Matrix> grams;
    for (std::size_t mu = 0; mu < dims.size(); ++mu) {
        const Vector w = positive_weights(dims[mu], 10 + mu);
        f.push_back(MetricFactor::diagonal(w));
        grams.push_back(w.asDiagonal());
    }
    const RankOneMetric m(f);
    const Vector da = oracle::dense(a), db = oracle::dense(b);
    const double want = da.dot(oracle::dense_metric(grams) * db);
    EXPECT_NEAR(ct_inner(a, b, m), want, 1e-12 * std::abs(want) + 1e-14);
    EXPECT_NEAR(ct_inner(a, b, m), ct_inner(b, a, m), 1e-12 * std::abs(want));
}

TEST(CtInner, InvariantAgainstDenseForGeneralMetric) {
    const std::vector<Index> dims{3, 4};
    const Matrix g0 = random_spd(3, 21), g1 = random_spd(4, 22);
    const RankOneMetric m({MetricFactor::general(g0), MetricFactor::general(g1)});
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto a = ct_random(dims, 1 + s % 3, 100 + s);
        const auto b = ct_random(dims, 2, 200 + s);
        const double want = oracle::dense(a).dot(oracle::dense_metric({g0, g1}) * oracle::dense(b));
        EXPECT_LE(std::abs(ct_inner(a, b, m) - want), 1e-10 * ct_norm(a, m) * ct_norm(b, m));
    }
}

TEST(CtNorm, ZeroTensor) { EXPECT_EQ(ct_norm(CanonicalTensor::zero({2, 2}), RankOneMetric::identity({2, 2})), 0.0); }

TEST(CtNorm, UnitFactorsGiveOne) {
    const Vector w0 = positive_weights(3, 1), w1 = positive_weights(2, 2);
    Vector u = Vector::Ones(3), v = Vector::Ones(2);
    u /= std::sqrt(u.dot(w0.asDiagonal() * u));
    v /= std::sqrt(v.dot(w1.asDiagonal() * v));
    const RankOneMetric m({MetricFactor::diagonal(w0), MetricFactor::diagonal(w1)});
    EXPECT_NEAR(ct_norm(CanonicalTensor::rank_one({u, v}), m), 1.0, 1e-14);
}

TEST(CtNorm, RandomRankThreeMatchesDense) {
    const auto a = ct_random({5, 4, 3}, 3, 9);
    EXPECT_NEAR(ct_norm(a), oracle::dense(a).norm(), 1e-12 * oracle::dense(a).norm());
}

TEST(CtToDense, RankOneOrderTwoIsOuterProduct) {
    Vector u(2), v(2);
    u << 1, 2;
    v << 3, -1;
    const Matrix m = ct_to_matrix(CanonicalTensor::rank_one({u, v}));
    EXPECT_EQ(m, (u * v.transpose()).eval());
    const Vector flat = ct_to_dense(CanonicalTensor::rank_one({u, v}));
    EXPECT_EQ(flat(1), 2.0 * 3.0);  // first index fastest
    EXPECT_EQ(flat(2), 1.0 * -1.0);
}

TEST(CtToDense, RandomOrderThreeMatchesEntrywise) {
    const auto a = ct_random({3, 2, 4}, 2, 12);
    EXPECT_LE((ct_to_dense(a) - oracle::dense(a)).norm(), 1e-14 * oracle::dense(a).norm());
}

TEST(CtToDense, GuardRejectsLargeExpansion) {
    EXPECT_THROW(ct_to_dense(CanonicalTensor::zero({1000, 1000, 100})), GuardExceeded);
}

TEST(CtFromDense, RoundTripsOrderThree) {
    const auto a = ct_random({3, 4, 2}, 2, 8);
    const Vector d = ct_to_dense(a);
    EXPECT_LE((ct_to_dense(ct_from_dense({3, 4, 2}, d)) - d).norm(), 1e-15 * d.norm());
}

TEST(CtScale, IsExact) {
    const auto a = ct_random({3, 4, 2}, 3, 13);
    EXPECT_LE((ct_to_dense(ct_scale(a, -2.5)) + 2.5 * ct_to_dense(a)).norm(), 1e-14 * ct_to_dense(a).norm());
}

TEST(MetricFactor, RejectsNonPositiveDefinite) {
    Matrix g = Matrix::Identity(2, 2);
    g(1, 1) = -1.0;
    EXPECT_THROW(MetricFactor::general(g), NumericalFailure);
    Vector w(2);
    w << 1.0, 0.0;
    EXPECT_THROW(MetricFactor::diagonal(w), NumericalFailure);
}

TEST(Svd2dProject, IdempotentOnRankR) {
    const auto a = ct_random({6, 5}, 3, 30);
    const auto p = svd2d_project(a, 3, RankOneMetric::identity({6, 5}));
    EXPECT_LE((ct_to_dense(p) - ct_to_dense(a)).norm(), 1e-12 * ct_norm(a));
}

TEST(Svd2dProject, DiagonalRankOneTruncation) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = 1.0;
    const RankOneMetric id = RankOneMetric::identity({2, 2});
    const MetricSvd svd = metric_svd(ct_from_matrix(m), id);
    EXPECT_NEAR(svd.sigma(0), 3.0, 1e-14);
    const auto p = svd2d_project(ct_from_matrix(m), 1, id);
    EXPECT_NEAR((ct_to_matrix(p) - m).norm(), 1.0, 1e-14);
}

TEST(Svd2dProject, WeightedMatchesDenseOracle) {
    Vector w0 = Vector::Ones(6), w1 = Vector::Ones(5);
    w0(0) = 100.0;  // weights (10, 1, ...) squared
    const RankOneMetric m({MetricFactor::diagonal(w0), MetricFactor::diagonal(w1)});
    const auto a = ct_random({6, 5}, 4, 31);
    const Matrix mat = ct_to_matrix(a);
    for (Index r = 1; r <= 4; ++r) {
        const Matrix want = oracle::weighted_best(mat, w0, w1, r);
        const Matrix got = ct_to_matrix(svd2d_project(a, r, m));
        const Matrix d = w0.cwiseSqrt().asDiagonal() * (got - want);
        EXPECT_LE(d.norm(), 1e-10 * ct_norm(a, m)) << "r = " << r;
    }
}

TEST(Svd2dProject, RejectsOrderThree) {
    EXPECT_THROW(svd2d_project(ct_random({2, 2, 2}, 1, 1), 1, RankOneMetric::identity({2, 2, 2})), DimensionMismatch);
}

TEST(Svd2dProject, RankAboveMinDimensionClamps) {
    const auto a = ct_random({4, 3}, 5, 32);
    const auto p = svd2d_project(a, 10, RankOneMetric::identity({4, 3}));
    EXPECT_LE(p.rank(), 3);
    EXPECT_LE((ct_to_dense(p) - ct_to_dense(a)).norm(), 1e-12 * ct_norm(a));
}

TEST(Svd2dProject, PythagorasAndMonotoneErrorProperty) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Index n0 = 3 + s % 5, n1 = 2 + (s * 3) % 6;
        const Matrix g0 = random_spd(n0, 40 + s);
        const RankOneMetric m({MetricFactor::general(g0), MetricFactor::diagonal(positive_weights(n1, 60 + s))});
        const auto a = ct_random({n0, n1}, 4, 80 + s);
        const Matrix g1 = positive_weights(n1, 60 + s).asDiagonal();
        // Dense weighted norm; Gram sums of a cancelling difference lose half the digits.
        auto wnorm = [&](const Matrix& x) { return std::sqrt(std::max((x.transpose() * g0 * x * g1).trace(), 0.0)); };
        const Matrix am = ct_to_matrix(a);
        const double na2 = std::pow(wnorm(am), 2);
        double prev = std::numeric_limits<double>::infinity();
        for (Index r = 1; r <= std::min(n0, n1); ++r) {
            const auto p = svd2d_project(a, r, m);
            const double err = wnorm(am - ct_to_matrix(p));
            const double np = wnorm(ct_to_matrix(p));
            EXPECT_NEAR(err * err + np * np, na2, 1e-10 * na2);
            EXPECT_LE(err, prev * (1 + 1e-12) + 1e-14);
            prev = err;
        }
        EXPECT_LE(prev, 1e-12 * std::sqrt(na2));
    }
}

TEST(Svd2dProject, LeftVectorsHavePositiveLargestEntry) {
    const auto a = ct_random({7, 5}, 5, 33);
    const MetricSvd svd = metric_svd(a, RankOneMetric::identity({7, 5}));
    for (Index i = 0; i < svd.left.cols(); ++i) {
        Index k = 0;
        svd.left.col(i).cwiseAbs().maxCoeff(&k);
        EXPECT_GT(svd.left(k, i), 0.0);
    }
    // Flipping the input flips right vectors only.
    const MetricSvd neg = metric_svd(ct_scale(a, -1.0), RankOneMetric::identity({7, 5}));
    EXPECT_LE((neg.left - svd.left).norm(), 1e-12);
    EXPECT_LE((neg.right + svd.right).norm(), 1e-12);
}

TEST(Serialization, TensorRoundTripIsExactInBothEncodings) {
    const auto a = ct_random({5, 3, 4}, 3, 50);
    for (auto enc : {TensorEncoding::json, TensorEncoding::binary}) {
        std::stringstream ss;
        write_tensor(ss, a, enc);
        const auto b = read_tensor(ss);
        ASSERT_EQ(b.dims(), a.dims());
        for (Index mu = 0; mu < 3; ++mu) EXPECT_EQ(b.factor(mu), a.factor(mu));
    }
}

TEST(Serialization, ZeroRankTensorRoundTrips) {
    std::stringstream ss;
    write_tensor(ss, CanonicalTensor::zero({3, 2}), TensorEncoding::binary);
    const auto b = read_tensor(ss);
    EXPECT_EQ(b.rank(), 0);
    EXPECT_EQ(b.dims(), (std::vector<Index>{3, 2}));
}

TEST(Serialization, HeaderIsSelfDescribing) {
    std::stringstream ss;
    write_tensor(ss, ct_random({2, 3}, 1, 1), TensorEncoding::binary);
    std::string line;
    std::getline(ss, line);
    const auto h = nlohmann::json::parse(line);
    EXPECT_EQ(h["order"], 2);
    EXPECT_EQ(h["rank"], 1);
    EXPECT_EQ(h["dims"], (std::vector<int>{2, 3}));
    EXPECT_EQ(h["layout"], "row-major");
}

TEST(Serialization, TruncatedPayloadIsRejected) {
    std::stringstream ss;
    write_tensor(ss, ct_random({4, 4}, 2, 2), TensorEncoding::binary);
    std::string s = ss.str();
    s.resize(s.size() - 8);
    std::stringstream cut(s);
    EXPECT_THROW(read_tensor(cut), ConfigError);
}

TEST(Serialization, MetricRoundTrip) {
    const RankOneMetric m({MetricFactor::general(random_spd(3, 1)), MetricFactor::diagonal(positive_weights(2, 2)),
                           MetricFactor::identity(4)});
    const RankOneMetric back = metric_from_json(metric_to_json(m));
    const auto a = ct_random({3, 2, 4}, 2, 3);
    EXPECT_EQ(ct_norm(a, back), ct_norm(a, m));
    EXPECT_EQ(back.factor(2).kind(), MetricKind::identity);
}
