#include <charrec/matrix_ops.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <sstream>

using namespace charrec;

TEST(SoftThreshold, ScalarCases) {
    EXPECT_EQ(soft_threshold(5.0, 2.0), 3.0);
    EXPECT_EQ(soft_threshold(-5.0, 2.0), -3.0);
    EXPECT_EQ(soft_threshold(1.0, 2.0), 0.0);
    for (double x : {-7.25, -1e-9, 0.0, 3.5, 1e300}) EXPECT_EQ(soft_threshold(x, 0.0), x);
}

TEST(SoftThreshold, RejectsBadArguments) {
    EXPECT_THROW(soft_threshold(std::numeric_limits<double>::quiet_NaN(), 1.0), InvalidArgument);
    EXPECT_THROW(soft_threshold(std::numeric_limits<double>::infinity(), 1.0), InvalidArgument);
    EXPECT_THROW(soft_threshold(1.0, -0.1), InvalidArgument);
    EXPECT_THROW(soft_threshold_matrix(Matrix::Ones(2, 2), -1.0), InvalidArgument);
    Matrix bad = Matrix::Zero(2, 2);
    bad(1, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(soft_threshold_matrix(bad, 1.0), InvalidArgument);
}

TEST(SoftThreshold, OddAndNonexpansive) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> a(-10.0, 10.0), l(0.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
        const double x = a(rng), y = a(rng), lam = l(rng);
        const double sx = soft_threshold(x, lam);
        EXPECT_EQ(soft_threshold(-x, lam), -sx);
        EXPECT_LE(std::abs(sx - soft_threshold(y, lam)),
                  std::abs(x - y) + 4 * std::numeric_limits<double>::epsilon() * std::max({std::abs(x), std::abs(y), lam}));
        EXPECT_LE(std::abs(sx), std::abs(x));
        EXPECT_TRUE(sx == 0.0 || (sx > 0) == (x > 0));
    }
}

TEST(SoftThresholdMatrix, Entrywise) {
    Matrix a(2, 2);
    a << 3, -1, 0.5, -4;
    Matrix expected(2, 2);
    expected << 2, 0, 0, -3;
    EXPECT_EQ(soft_threshold_matrix(a, 1.0), expected);
    EXPECT_EQ(soft_threshold_matrix(Matrix::Zero(3, 4), 0.7), Matrix::Zero(3, 4));
}

TEST(SoftThresholdMatrix, MinimizesProximalObjective) {
    std::mt19937_64 rng(5);
    const Matrix a = oracle::random_matrix(5, 5, rng);
    const double lam = 0.3;
    auto objective = [&](const Matrix& x) { return lam * oracle::l1(x) + 0.5 * (x - a).squaredNorm(); };
    const Matrix x = soft_threshold_matrix(a, lam);
    const double best = objective(x);
    EXPECT_LE(best, objective(a));
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        Matrix p = x;
        const double scale = std::pow(10.0, -1.0 - 3.0 * (k % 4) / 3.0);
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += scale * n(rng);
        EXPECT_GE(objective(p), best - 1e-12);
    }
}

TEST(Svd, Identity) {
    const SvdFactors f = svd(Matrix::Identity(3, 3));
    EXPECT_TRUE(f.s.isApprox(Vector::Ones(3), 1e-14));
}

TEST(Svd, DiagonalGivesSignedPermutations) {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    const SvdFactors f = svd(d);
    EXPECT_NEAR(f.s(0), 3.0, 1e-14);
    EXPECT_NEAR(f.s(1), 1.0, 1e-14);
    for (const Matrix* q : {&f.u, &f.v}) {
        EXPECT_TRUE(q->cwiseAbs().isApprox(Matrix::Identity(2, 2), 1e-14));
    }
}

TEST(Svd, RankOneOuterProduct) {
    Vector a(3), b(4);
    a << 2, 0, 0;
    b << 0, 3, 0, 0;
    const Matrix rot = Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()))
                           .toRotationMatrix();
    const Vector ar = rot * a;
    const SvdFactors f = svd(ar * b.transpose());
    EXPECT_NEAR(f.s(0), 6.0, 1e-12);
    for (Eigen::Index i = 1; i < f.s.size(); ++i) EXPECT_NEAR(f.s(i), 0.0, 1e-12);
}

TEST(Svd, FactorInvariantsOnRandomMatrices) {
    std::mt19937_64 rng(17);
    for (auto [r, c] : {std::pair{7, 4}, std::pair{4, 7}, std::pair{6, 6}, std::pair{1, 5}}) {
        const Matrix m = oracle::random_matrix(r, c, rng);
        const SvdFactors f = svd(m);
        const Eigen::Index k = std::min(r, c);
        ASSERT_EQ(f.s.size(), k);
        ASSERT_EQ(f.u.cols(), k);
        ASSERT_EQ(f.v.cols(), k);
        for (Eigen::Index i = 0; i + 1 < k; ++i) EXPECT_GE(f.s(i), f.s(i + 1));
        EXPECT_GE(f.s.minCoeff(), 0.0);
        EXPECT_LE((f.u.transpose() * f.u - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((f.v.transpose() * f.v - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((f.reconstruct() - m).norm() / m.norm(), 1e-8);
        EXPECT_TRUE(f.s.isApprox(oracle::singular_values(m), 1e-10));
        // Sign convention: the first non-negligible entry of each left vector is nonnegative.
        for (Eigen::Index j = 0; j < k; ++j) {
            for (Eigen::Index i = 0; i < f.u.rows(); ++i) {
                if (std::abs(f.u(i, j)) > 1e-12) {
                    EXPECT_GT(f.u(i, j), 0.0);
                    break;
                }
            }
        }
    }
}

TEST(Svd, Deterministic) {
    std::mt19937_64 rng(3);
    const Matrix m = oracle::random_matrix(9, 5, rng);
    const SvdFactors a = svd(m), b = svd(m);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.s, b.s);
    EXPECT_EQ(a.v, b.v);
}

TEST(Svd, RejectsNonFinite) {
    Matrix m = Matrix::Ones(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(svd(m), InvalidArgument);
}

TEST(Svt, DiagonalShrinksSingularValues) {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 1;
    EXPECT_LE((svt(d, 2.0) - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Svt, ZeroAndLargeThresholds) {
    std::mt19937_64 rng(23);
    const Matrix m = oracle::random_matrix(6, 4, rng);
    EXPECT_LE((svt(m, 0.0) - m).norm() / m.norm(), 1e-8);
    EXPECT_EQ(svt(m, svd(m).s(0)), Matrix::Zero(6, 4));
    EXPECT_EQ(svt(m, 1e6), Matrix::Zero(6, 4));
}

TEST(Svt, MatchesEigenOracleAndKeepsRank) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix m = oracle::random_matrix(6, 6, rng);
        const double tau = 0.5 + 0.2 * trial;
        const Matrix x = svt(m, tau);
        EXPECT_LE((x - oracle::singular_value_shrink(m, tau)).norm(), 1e-9 * (1.0 + m.norm()));
        const Matrix low = oracle::random_matrix(6, 2, rng) * oracle::random_matrix(2, 6, rng);
        const Vector s = oracle::singular_values(svt(low, 0.1));
        for (Eigen::Index i = 2; i < s.size(); ++i) EXPECT_LT(s(i), 1e-6 * s(0));
    }
}

TEST(Svt, Nonexpansive) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 100; ++i) {
        const Matrix a = oracle::random_matrix(6, 6, rng);
        const Matrix b = oracle::random_matrix(6, 6, rng);
        EXPECT_LE((svt(a, 1.0) - svt(b, 1.0)).norm(), (a - b).norm() + 1e-12);
    }
}

TEST(Norms, KnownMatrices) {
    const MatrixNorms i3 = norms(Matrix::Identity(3, 3));
    EXPECT_NEAR(i3.nuclear, 3.0, 1e-14);
    EXPECT_EQ(i3.l1, 3.0);
    EXPECT_NEAR(i3.frobenius, std::sqrt(3.0), 1e-15);
    EXPECT_EQ(i3.l0, 3);

    const MatrixNorms z = norms(Matrix::Zero(4, 2));
    EXPECT_EQ(z.nuclear, 0.0);
    EXPECT_EQ(z.l1, 0.0);
    EXPECT_EQ(z.frobenius, 0.0);
    EXPECT_EQ(z.l0, 0);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 4;
    const MatrixNorms n = norms(d);
    EXPECT_NEAR(n.nuclear, 7.0, 1e-13);
    EXPECT_NEAR(n.frobenius, 5.0, 1e-14);
}

TEST(Norms, L0Tolerance) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1e-13;
    m(1, 1) = 2e-12;
    EXPECT_EQ(l0_count(m), 1);
}

TEST(Norms, ConsistentWithSingularValues) {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 20; ++i) {
        const Matrix m = oracle::random_matrix(5 + i % 3, 4 + i % 5, rng);
        const Vector s = svd(m).s;
        EXPECT_LE(std::abs(nuclear_norm(m) - s.sum()) / s.sum(), 1e-8);
        EXPECT_LE(std::abs(m.squaredNorm() - s.squaredNorm()) / m.squaredNorm(), 1e-8);
    }
}

TEST(MatrixText, RoundTripIsExact) {
    std::mt19937_64 rng(41);
    const Matrix m = oracle::random_matrix(3, 5, rng) * 1e3;
    std::stringstream ss;
    write_matrix_text(ss, m);
    EXPECT_EQ(read_matrix_text(ss), m);
}

TEST(MatrixText, ParsesHandWrittenInput) {
    std::istringstream in("2 3\n1 2 3\n-4.5 0 1e-3\n");
    Matrix expected(2, 3);
    expected << 1, 2, 3, -4.5, 0, 1e-3;
    EXPECT_EQ(read_matrix_text(in), expected);
}

TEST(MatrixText, RejectsMalformedInput) {
    for (const char* text : {"", "2 2\n1 2\n3\n", "0 3\n", "1 2\n1 x\n", "1 1\n5 6\n", "1 1\nnan\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(read_matrix_text(in, "fixture"), Error) << text;
    }
}
