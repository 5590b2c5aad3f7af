#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// solver code under test beyond plain Eigen arithmetic.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double shrink(double a, double t) {
    if (a > t) return a - t;
    if (a < -t) return a + t;
    return 0.0;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
    return random_matrix(n, 1, rng).col(0);
}

inline Matrix unit_columns(Matrix m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j).normalize();
    return m;
}

// Singular values via the symmetric eigen-decomposition of m^T m (or m m^T).
inline Vector singular_values(const Matrix& m) {
    const Matrix g = m.rows() >= m.cols() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    return ev;
}

inline double nuclear(const Matrix& m) { return singular_values(m).sum(); }

inline double l1(const Matrix& m) { return m.cwiseAbs().sum(); }

// lambda ||z||_1 + ||y - D z||^2
inline double lasso_objective(const Matrix& d, const Vector& y, const Vector& z, double lambda) {
    return lambda * z.lpNorm<1>() + (y - d * z).squaredNorm();
}

inline double lipschitz(const Matrix& d) {
    return 2.0 * singular_values(d)(0) * singular_values(d)(0);
}

// Plain proximal gradient (ISTA) from zero with step 1/L.
inline Vector proximal_gradient(const Matrix& d, const Vector& y, double lambda, int iterations) {
    const double step = 1.0 / lipschitz(d);
    Vector z = Vector::Zero(d.cols());
    for (int k = 0; k < iterations; ++k) {
        const Vector grad = -2.0 * d.transpose() * (y - d * z);
        z = (z - step * grad).unaryExpr([&](double v) { return shrink(v, step * lambda); });
    }
    return z;
}

// Subgradient-based optimality violation for the lasso objective above.
inline double kkt_violation(const Matrix& d, const Vector& y, const Vector& z, double lambda) {
    const Vector c = 2.0 * d.transpose() * (y - d * z);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double v = z(j) != 0.0 ? std::abs(c(j) - lambda * (z(j) > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(c(j)) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

// Accelerated proximal gradient run long enough to reach machine-precision optimality.
inline Vector converged_lasso(const Matrix& d, const Vector& y, double lambda, int iterations = 200000) {
    const double step = 1.0 / lipschitz(d);
    Vector z = Vector::Zero(d.cols());
    Vector w = z;
    double t = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < iterations; ++k) {
        const Vector grad = -2.0 * d.transpose() * (y - d * w);
        const Vector next =
            (w - step * grad).unaryExpr([&](double v) { return shrink(v, step * lambda); });
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double obj = lasso_objective(d, y, next, lambda);
        if (obj > prev) {
            w = z;  // restart momentum
            t = 1.0;
            continue;
        }
        w = next + ((t - 1.0) / t_next) * (next - z);
        z = next;
        t = t_next;
        prev = obj;
        if (k % 100 != 99) continue;
        if (kkt_violation(d, y, z, lambda) < 1e-12) break;
        // Once the support and signs have settled, solve the stationarity equations on it.
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < z.size(); ++j)
            if (z(j) != 0.0) support.push_back(j);
        if (support.empty()) continue;
        Matrix ds(d.rows(), static_cast<Eigen::Index>(support.size()));
        Vector rhs(ds.cols());
        for (std::size_t i = 0; i < support.size(); ++i) {
            ds.col(static_cast<Eigen::Index>(i)) = d.col(support[i]);
            rhs(static_cast<Eigen::Index>(i)) =
                d.col(support[i]).dot(y) - 0.5 * lambda * (z(support[i]) > 0 ? 1.0 : -1.0);
        }
        const Vector zs = (ds.transpose() * ds).completeOrthogonalDecomposition().solve(rhs);
        Vector polished = Vector::Zero(z.size());
        for (std::size_t i = 0; i < support.size(); ++i) polished(support[i]) = zs(static_cast<Eigen::Index>(i));
        bool signs_kept = true;
        for (std::size_t i = 0; i < support.size(); ++i)
            signs_kept = signs_kept && polished(support[i]) * z(support[i]) > 0.0;
        if (signs_kept && kkt_violation(d, y, polished, lambda) < 1e-11) return polished;
    }
    return z;
}

// Index of the column closest to y/|y| in Euclidean distance; lowest index wins ties.
inline Eigen::Index brute_force_nearest(const Matrix& atoms, const Vector& y) {
    const Vector u = y / y.norm();
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
        const double dist = (atoms.col(j) - u).squaredNorm();
        if (dist < best_d) {
            best_d = dist;
            best = j;
        }
    }
    return best;
}

// Minimizer of tau ||X||_* + 1/2 ||X - M||_F^2 built from the eigen-decomposition
// of M^T M rather than a direct SVD.
inline Matrix singular_value_shrink(const Matrix& m, double tau) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.transpose() * m);
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double s = std::sqrt(std::max(0.0, es.eigenvalues()(k)));
        if (s <= tau || s < 1e-12) continue;
        const Vector v = es.eigenvectors().col(k);
        const Vector u = m * v / s;
        out += (s - tau) * u * v.transpose();
    }
    return out;
}

}  // namespace oracle
