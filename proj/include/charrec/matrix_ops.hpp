#pragma once

#include <charrec/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace charrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Entries with magnitude at or below this count as zero for the l0 norm.
inline constexpr double kL0Tolerance = 1e-12;

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
    if (!m.allFinite()) {
        throw InvalidArgument(std::string(what) + ": matrix contains NaN or Inf");
    }
}

/// Proximal operator of lambda*|.|: moves `a` toward zero by `lambda` and clips at zero.
inline double soft_threshold(double a, double lambda) {
    if (!std::isfinite(a)) {
        throw InvalidArgument("soft_threshold: non-finite argument");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("soft_threshold: threshold must be finite and nonnegative");
    }
    if (a > lambda) return a - lambda;
    if (a < -lambda) return a + lambda;
    return 0.0;
}

/// Entrywise soft threshold; the minimizer of lambda*||X||_1 + 0.5*||X - m||_F^2.
inline Matrix soft_threshold_matrix(const Eigen::Ref<const Matrix>& m, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("soft_threshold_matrix: threshold must be finite and nonnegative");
    }
    require_finite(m, "soft_threshold_matrix");
    return m.unaryExpr([lambda](double a) {
        if (a > lambda) return a - lambda;
        if (a < -lambda) return a + lambda;
        return 0.0;
    });
}

/// Thin singular value decomposition m = u * diag(s) * v^T with k = min(rows, cols).
struct SvdFactors {
    Matrix u;  // rows x k, orthonormal columns
    Vector s;  // k entries, nonincreasing, nonnegative
    Matrix v;  // cols x k, orthonormal columns

    Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
};

/// Thin SVD with a deterministic sign convention: the first entry of each column of u
/// whose magnitude exceeds kL0Tolerance is nonnegative.
inline SvdFactors svd(const Eigen::Ref<const Matrix>& m) {
    require_finite(m, "svd");
    if (m.rows() == 0 || m.cols() == 0) {
        throw InvalidArgument("svd: empty matrix");
    }
    Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) {
        throw SvdError("svd: factorization did not converge");
    }
    SvdFactors f{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    if (!f.u.allFinite() || !f.v.allFinite() || !f.s.allFinite()) {
        throw SvdError("svd: factorization produced non-finite factors");
    }
    for (Eigen::Index j = 0; j < f.u.cols(); ++j) {
        for (Eigen::Index i = 0; i < f.u.rows(); ++i) {
            const double x = f.u(i, j);
            if (std::abs(x) > kL0Tolerance) {
                if (x < 0.0) {
                    f.u.col(j) *= -1.0;
                    f.v.col(j) *= -1.0;
                }
                break;
            }
        }
    }
    return f;
}

/// Singular value thresholding: the minimizer of tau*||X||_* + 0.5*||X - m||_F^2.
inline Matrix svt(const Eigen::Ref<const Matrix>& m, double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw InvalidArgument("svt: threshold must be finite and nonnegative");
    }
    const SvdFactors f = svd(m);
    Eigen::Index kept = 0;
    while (kept < f.s.size() && f.s(kept) > tau) ++kept;
    if (kept == 0) return Matrix::Zero(m.rows(), m.cols());
    const Vector shrunk = f.s.head(kept).array() - tau;
    return f.u.leftCols(kept) * shrunk.asDiagonal() * f.v.leftCols(kept).transpose();
}

struct MatrixNorms {
    double nuclear = 0.0;
    double l1 = 0.0;
    double frobenius = 0.0;
    std::int64_t l0 = 0;
};

inline double nuclear_norm(const Eigen::Ref<const Matrix>& m) {
    require_finite(m, "nuclear_norm");
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw SvdError("nuclear_norm: factorization did not converge");
    }
    return solver.singularValues().sum();
}

inline std::int64_t l0_count(const Eigen::Ref<const Matrix>& m) {
    return (m.array().abs() > kL0Tolerance).count();
}

inline MatrixNorms norms(const Eigen::Ref<const Matrix>& m) {
    require_finite(m, "norms");
    MatrixNorms n;
    n.nuclear = nuclear_norm(m);
    n.l1 = m.cwiseAbs().sum();
    n.frobenius = m.norm();
    n.l0 = l0_count(m);
    return n;
}

// Matrix text format: "rows cols" on the first line, then one line per row of
// whitespace-separated decimals.

inline Matrix read_matrix_text(std::istream& in, const std::string& source = "<stream>") {
    long long rows = 0;
    long long cols = 0;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
        throw IoError(source + ": expected a positive 'rows cols' header");
    }
    Matrix m(rows, cols);
    for (long long i = 0; i < rows; ++i) {
        for (long long j = 0; j < cols; ++j) {
            double x = 0.0;
            if (!(in >> x)) {
                throw IoError(source + ": truncated matrix data at row " + std::to_string(i + 1) +
                              ", column " + std::to_string(j + 1));
            }
            if (!std::isfinite(x)) {
                throw IoError(source + ": non-finite entry at row " + std::to_string(i + 1));
            }
            m(i, j) = x;
        }
    }
    std::string trailing;
    if (in >> trailing) {
        throw IoError(source + ": unexpected trailing data '" + trailing + "'");
    }
    return m;
}

inline Matrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    return read_matrix_text(in, path.string());
}

inline void write_matrix_text(std::ostream& out, const Eigen::Ref<const Matrix>& m) {
    std::ostringstream buf;
    buf << std::setprecision(std::numeric_limits<double>::max_digits10);
    buf << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) buf << ' ';
            buf << m(i, j);
        }
        buf << '\n';
    }
    out << buf.str();
}

inline void write_matrix_file(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    write_matrix_text(out, m);
    if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace charrec
