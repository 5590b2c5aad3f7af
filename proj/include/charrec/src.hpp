#pragma once

#include <charrec/error.hpp>
#include <charrec/matrix_ops.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace charrec {

using ClassId = std::string;

/// Divides every column by its L2 norm. Columns with norm below 1e-12 are rejected.
inline Matrix normalize_columns(const Matrix& atoms) {
    require_finite(atoms, "normalize_columns");
    Matrix out = atoms;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double n = out.col(j).norm();
        if (n < 1e-12) {
            throw InvalidArgument("normalize_columns: column " + std::to_string(j) +
                                  " has zero norm");
        }
        out.col(j) /= n;
    }
    return out;
}

/// Column-normalized training features partitioned into classes.
class Dictionary {
public:
    Dictionary() = default;

    /// `atoms` must already have unit columns; `labels[j]` is the class of column j.
    Dictionary(Matrix atoms, std::vector<ClassId> labels) : atoms_(std::move(atoms)) {
        if (atoms_.cols() == 0 || atoms_.rows() == 0) {
            throw InvalidArgument("Dictionary: needs at least one atom");
        }
        if (static_cast<Eigen::Index>(labels.size()) != atoms_.cols()) {
            throw InvalidArgument("Dictionary: one label per column required");
        }
        require_finite(atoms_, "Dictionary");
        for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
            if (std::abs(atoms_.col(j).norm() - 1.0) > 1e-10) {
                throw InvalidArgument("Dictionary: column " + std::to_string(j) +
                                      " is not unit-norm");
            }
        }
        class_ids_ = labels;
        std::sort(class_ids_.begin(), class_ids_.end());
        class_ids_.erase(std::unique(class_ids_.begin(), class_ids_.end()), class_ids_.end());
        class_of_.reserve(labels.size());
        members_.assign(class_ids_.size(), {});
        for (std::size_t j = 0; j < labels.size(); ++j) {
            const auto it = std::lower_bound(class_ids_.begin(), class_ids_.end(), labels[j]);
            const auto c = static_cast<std::size_t>(it - class_ids_.begin());
            class_of_.push_back(c);
            members_[c].push_back(static_cast<Eigen::Index>(j));
        }
    }

    /// Normalizes raw feature columns and builds the dictionary.
    static Dictionary from_features(const Matrix& features, std::vector<ClassId> labels) {
        return Dictionary(normalize_columns(features), std::move(labels));
    }

    const Matrix& atoms() const noexcept { return atoms_; }
    Eigen::Index feature_dim() const noexcept { return atoms_.rows(); }
    Eigen::Index atom_count() const noexcept { return atoms_.cols(); }
    std::size_t class_count() const noexcept { return class_ids_.size(); }

    /// Sorted, distinct class identifiers; this order breaks ties.
    const std::vector<ClassId>& class_ids() const noexcept { return class_ids_; }

    /// Index into class_ids() of the class owning column j.
    std::size_t class_index_of(Eigen::Index j) const { return class_of_.at(static_cast<std::size_t>(j)); }
    const ClassId& class_of(Eigen::Index j) const { return class_ids_[class_index_of(j)]; }
    const std::vector<Eigen::Index>& columns_of(std::size_t class_index) const {
        return members_.at(class_index);
    }

    std::vector<ClassId> labels() const {
        std::vector<ClassId> out;
        out.reserve(class_of_.size());
        for (std::size_t c : class_of_) out.push_back(class_ids_[c]);
        return out;
    }

    std::optional<std::size_t> find_class(const ClassId& id) const {
        const auto it = std::lower_bound(class_ids_.begin(), class_ids_.end(), id);
        if (it == class_ids_.end() || *it != id) return std::nullopt;
        return static_cast<std::size_t>(it - class_ids_.begin());
    }

    friend bool operator==(const Dictionary& a, const Dictionary& b) {
        return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() &&
               a.atoms_ == b.atoms_ && a.class_of_ == b.class_of_ && a.class_ids_ == b.class_ids_;
    }

private:
    Matrix atoms_;
    std::vector<ClassId> class_ids_;
    std::vector<std::size_t> class_of_;
    std::vector<std::vector<Eigen::Index>> members_;
};

/// lambda * ||z||_1 + ||y - D z||_2^2
inline double l1_objective(const Matrix& atoms, const Vector& y, const Vector& z, double lambda) {
    return lambda * z.lpNorm<1>() + (y - atoms * z).squaredNorm();
}

struct KktReport {
    double max_violation = 0.0;
    bool pass = false;
};

/// Optimality certificate for the l1 problem above: with c = 2 D^T (y - D z),
/// active coordinates need c_j = lambda * sign(z_j) and inactive ones |c_j| <= lambda.
inline KktReport kkt_check(const Matrix& atoms, const Vector& y, const Vector& z, double lambda) {
    if (atoms.rows() != y.size() || atoms.cols() != z.size()) {
        throw InvalidArgument("kkt_check: shape mismatch");
    }
    const Vector c = 2.0 * (atoms.transpose() * (y - atoms * z));
    KktReport r;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double v = z(j) != 0.0 ? std::abs(c(j) - lambda * (z(j) > 0.0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(c(j)) - lambda);
        r.max_violation = std::max(r.max_violation, v);
    }
    r.pass = r.max_violation <= 1e-6 * std::max(1.0, lambda);
    return r;
}

inline KktReport kkt_check(const Dictionary& dict, const Vector& y, const Vector& z, double lambda) {
    return kkt_check(dict.atoms(), y, z, lambda);
}

enum class SolverStatus {
    exact,     // the path reached the target with a valid certificate
    degraded,  // the path stalled or failed its certificate; refined by proximal gradient
};

inline const char* to_string(SolverStatus s) {
    return s == SolverStatus::exact ? "exact" : "degraded";
}

struct HomotopyResult {
    Vector z;
    SolverStatus status = SolverStatus::exact;
    int breakpoints = 0;
    double objective = 0.0;
    KktReport kkt;
};

struct HomotopyOptions {
    double stagnation_step = 1e-14;
    int max_breakpoints = 0;          // 0: 20 * atoms + 100
    int refine_max_iterations = 50000;
};

namespace detail {

/// Lower Cholesky factor of the active Gram matrix, updated as atoms enter and leave.
class ActiveCholesky {
public:
    Eigen::Index size() const noexcept { return n_; }

    /// Appends a row/column; returns false when the new atom is numerically dependent.
    bool append(const Vector& cross, double diag) {
        if (n_ == l_.rows()) grow();
        Vector row = cross;
        if (n_ > 0) {
            l_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solveInPlace(row);
        }
        const double pivot2 = diag - row.squaredNorm();
        if (!(pivot2 > 1e-10 * diag)) return false;
        l_.row(n_).head(n_) = row.transpose();
        l_(n_, n_) = std::sqrt(pivot2);
        ++n_;
        return true;
    }

    /// Deletes row/column p and restores the lower-triangular shape with Givens rotations.
    void remove(Eigen::Index p) {
        for (Eigen::Index i = p; i + 1 < n_; ++i) l_.row(i).head(n_) = l_.row(i + 1).head(n_);
        for (Eigen::Index i = p; i + 1 < n_; ++i) {
            const double a = l_(i, i);
            const double b = l_(i, i + 1);
            const double r = std::hypot(a, b);
            if (r == 0.0) continue;
            const double cs = a / r;
            const double sn = b / r;
            for (Eigen::Index k = i; k + 1 < n_; ++k) {
                const double u = l_(k, i);
                const double v = l_(k, i + 1);
                l_(k, i) = cs * u + sn * v;
                l_(k, i + 1) = -sn * u + cs * v;
            }
        }
        --n_;
        for (Eigen::Index k = 0; k < n_ + 1; ++k) l_(k, n_) = 0.0;
        l_.row(n_).setZero();
    }

    Vector solve(const Vector& rhs) const {
        const auto l = l_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>();
        Vector x = l.solve(rhs);
        l.transpose().solveInPlace(x);
        return x;
    }

private:
    void grow() {
        const Eigen::Index cap = std::max<Eigen::Index>(8, 2 * l_.rows());
        Matrix bigger = Matrix::Zero(cap, cap);
        bigger.topLeftCorner(n_, n_) = l_.topLeftCorner(n_, n_);
        l_ = std::move(bigger);
    }

    Matrix l_;
    Eigen::Index n_ = 0;
};

inline double spectral_norm_squared(const Matrix& atoms) {
    const Matrix gram = atoms.cols() <= atoms.rows() ? Matrix(atoms.transpose() * atoms)
                                                     : Matrix(atoms * atoms.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

/// Accelerated proximal gradient with adaptive restart, started from z.
inline Vector proximal_refine(const Matrix& atoms, const Vector& y, Vector z, double lambda,
                              int max_iterations) {
    const double lipschitz = 2.0 * spectral_norm_squared(atoms) * 1.0001 + 1e-300;
    const double step = 1.0 / lipschitz;
    Vector momentum = z;
    double t = 1.0;
    for (int it = 0; it < max_iterations; ++it) {
        const Vector grad = -2.0 * (atoms.transpose() * (y - atoms * momentum));
        Vector next = momentum - step * grad;
        next = next.unaryExpr([thr = lambda * step](double a) {
            return a > thr ? a - thr : (a < -thr ? a + thr : 0.0);
        });
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const Vector diff = next - z;
        if ((momentum - next).dot(diff) > 0.0) {
            momentum = next;
            t = 1.0;
        } else {
            momentum = next + ((t - 1.0) / t_next) * diff;
            t = t_next;
        }
        z = std::move(next);
        if (it % 50 == 49 && kkt_check(atoms, y, z, lambda).max_violation <=
                                 1e-9 * std::max(1.0, lambda)) {
            break;
        }
    }
    return z;
}

}  // namespace detail

/// Minimizes lambda * ||z||_1 + ||y - D z||_2^2 by following the piecewise-linear
/// solution path from lambda_start = 2 ||D^T y||_inf (where z = 0) down to `lambda`.
///
/// The path is parameterized by t = lambda / 2, for which the active coordinates
/// satisfy D_A^T (y - D_A z_A) = t * s_A. Between breakpoints z_A moves along
/// G_A^{-1} s_A; an atom joins when its correlation reaches +-t and leaves when its
/// coefficient crosses zero. If the path stalls or its end point fails the KKT
/// certificate the result is refined by proximal gradient and marked degraded.
inline HomotopyResult homotopy_l1(const Matrix& atoms, const Vector& y, double lambda,
                                  const HomotopyOptions& options = {}) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("homotopy_l1: lambda must be positive");
    }
    if (atoms.rows() != y.size()) {
        throw InvalidArgument("homotopy_l1: feature vector has " + std::to_string(y.size()) +
                              " entries, dictionary expects " + std::to_string(atoms.rows()));
    }
    require_finite(atoms, "homotopy_l1");
    require_finite(y, "homotopy_l1");

    const Eigen::Index m = atoms.cols();
    const double target = 0.5 * lambda;
    HomotopyResult result;
    result.z = Vector::Zero(m);

    Vector corr = atoms.transpose() * y;
    Eigen::Index first = 0;
    double t = corr.size() ? corr.cwiseAbs().maxCoeff(&first) : 0.0;
    if (t <= target) {
        result.objective = l1_objective(atoms, y, result.z, lambda);
        result.kkt = kkt_check(atoms, y, result.z, lambda);
        return result;
    }

    std::vector<Eigen::Index> active;
    std::vector<double> signs;
    std::vector<char> is_active(static_cast<std::size_t>(m), 0);
    detail::ActiveCholesky chol;
    bool least_norm = false;  // set once the active Gram matrix becomes singular

    auto gram_cross = [&](Eigen::Index j) {
        Vector g(static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) {
            g(static_cast<Eigen::Index>(k)) = atoms.col(active[k]).dot(atoms.col(j));
        }
        return g;
    };
    auto active_gram = [&] {
        const auto k = static_cast<Eigen::Index>(active.size());
        Matrix g(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b <= a; ++b)
                g(a, b) = g(b, a) = atoms.col(active[static_cast<std::size_t>(a)])
                                        .dot(atoms.col(active[static_cast<std::size_t>(b)]));
        return g;
    };
    auto solve_active = [&](const Vector& rhs) -> Vector {
        if (!least_norm) return chol.solve(rhs);
        return Eigen::CompleteOrthogonalDecomposition<Matrix>(active_gram()).solve(rhs);
    };
    auto add_atom = [&](Eigen::Index j, double sign) {
        if (!least_norm) {
            const Vector cross = gram_cross(j);
            if (!chol.append(cross, atoms.col(j).squaredNorm())) least_norm = true;
        }
        active.push_back(j);
        signs.push_back(sign);
        is_active[static_cast<std::size_t>(j)] = 1;
    };
    auto drop_atom = [&](std::size_t pos) {
        const Eigen::Index j = active[pos];
        if (!least_norm) chol.remove(static_cast<Eigen::Index>(pos));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(pos));
        signs.erase(signs.begin() + static_cast<std::ptrdiff_t>(pos));
        is_active[static_cast<std::size_t>(j)] = 0;
        result.z(j) = 0.0;
    };

    add_atom(first, corr(first) > 0.0 ? 1.0 : -1.0);

    const int max_breakpoints =
        options.max_breakpoints > 0 ? options.max_breakpoints : static_cast<int>(20 * m + 100);
    int stalled = 0;
    bool degraded = false;
    Eigen::Index just_dropped = -1;

    while (true) {
        if (result.breakpoints >= max_breakpoints) {
            degraded = true;
            break;
        }
        const auto k = static_cast<Eigen::Index>(active.size());
        Vector s(k);
        for (Eigen::Index a = 0; a < k; ++a) s(a) = signs[static_cast<std::size_t>(a)];
        const Vector w = solve_active(s);

        Vector u = Vector::Zero(atoms.rows());
        for (Eigen::Index a = 0; a < k; ++a) u += w(a) * atoms.col(active[static_cast<std::size_t>(a)]);
        const Vector drift = atoms.transpose() * u;

        double step = t - target;
        enum class Event { end, join, drop } event = Event::end;
        Eigen::Index who = -1;

        for (Eigen::Index j = 0; j < m; ++j) {
            if (is_active[static_cast<std::size_t>(j)] || j == just_dropped) continue;
            const double up = 1.0 - drift(j);
            const double down = 1.0 + drift(j);
            if (up > 1e-14) {
                const double d = std::max(0.0, t - corr(j)) / up;
                if (d < step) {
                    step = d;
                    event = Event::join;
                    who = j;
                }
            }
            if (down > 1e-14) {
                const double d = std::max(0.0, t + corr(j)) / down;
                if (d < step) {
                    step = d;
                    event = Event::join;
                    who = j;
                }
            }
        }
        for (Eigen::Index a = 0; a < k; ++a) {
            const Eigen::Index j = active[static_cast<std::size_t>(a)];
            if (w(a) == 0.0) continue;
            const double d = -result.z(j) / w(a);
            if (d > 0.0 && d < step) {
                step = d;
                event = Event::drop;
                who = a;
            }
        }

        for (Eigen::Index a = 0; a < k; ++a) result.z(active[static_cast<std::size_t>(a)]) += step * w(a);
        t -= step;
        ++result.breakpoints;

        if (event == Event::end) {
            t = target;
            break;
        }

        stalled = step < options.stagnation_step ? stalled + 1 : 0;
        if (stalled > m) {
            degraded = true;
            break;
        }

        corr = atoms.transpose() * (y - atoms * result.z);
        if (event == Event::drop) {
            just_dropped = active[static_cast<std::size_t>(who)];
            drop_atom(static_cast<std::size_t>(who));
        } else {
            just_dropped = -1;
            add_atom(who, corr(who) > 0.0 ? 1.0 : -1.0);
        }
    }

    if (!degraded && !active.empty()) {
        // Re-solve the final active system directly to remove accumulated drift.
        const auto k = static_cast<Eigen::Index>(active.size());
        Vector rhs(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            rhs(a) = atoms.col(active[static_cast<std::size_t>(a)]).dot(y) -
                     target * signs[static_cast<std::size_t>(a)];
        }
        const Vector za = solve_active(rhs);
        Vector polished = Vector::Zero(m);
        bool consistent = true;
        for (Eigen::Index a = 0; a < k; ++a) {
            const double v = za(a);
            if (v * signs[static_cast<std::size_t>(a)] < 0.0) consistent = false;
            polished(active[static_cast<std::size_t>(a)]) = v;
        }
        if (consistent) result.z = std::move(polished);
    }

    result.kkt = kkt_check(atoms, y, result.z, lambda);
    if (degraded || !result.kkt.pass) {
        result.z = detail::proximal_refine(atoms, y, result.z, lambda, options.refine_max_iterations);
        result.kkt = kkt_check(atoms, y, result.z, lambda);
        result.status = SolverStatus::degraded;
    }
    result.objective = l1_objective(atoms, y, result.z, lambda);
    return result;
}

inline HomotopyResult homotopy_l1(const Dictionary& dict, const Vector& y, double lambda,
                                  const HomotopyOptions& options = {}) {
    return homotopy_l1(dict.atoms(), y, lambda, options);
}

/// r_i = ||y - D_i z_i||^2, where z_i keeps only the coefficients of class i.
inline std::vector<double> class_residuals(const Dictionary& dict, const Vector& z, const Vector& y) {
    if (z.size() != dict.atom_count() || y.size() != dict.feature_dim()) {
        throw InvalidArgument("class_residuals: shape mismatch");
    }
    std::vector<double> r(dict.class_count());
    for (std::size_t c = 0; c < dict.class_count(); ++c) {
        Vector approx = Vector::Zero(y.size());
        for (Eigen::Index j : dict.columns_of(c)) {
            if (z(j) != 0.0) approx += z(j) * dict.atoms().col(j);
        }
        r[c] = (y - approx).squaredNorm();
    }
    return r;
}

struct SparseCode {
    Vector z;
    double objective = 0.0;
    std::vector<double> residuals;
    std::size_t predicted_index = 0;
    ClassId predicted;
    double lambda = 0.0;
    double margin = 0.0;  // second-smallest minus smallest residual
    SolverStatus status = SolverStatus::exact;
};

namespace detail {

inline Vector normalized_query(const Vector& y, Eigen::Index expected, const char* who) {
    if (y.size() != expected) {
        throw InvalidArgument(std::string(who) + ": feature vector has " + std::to_string(y.size()) +
                              " entries, dictionary expects " + std::to_string(expected));
    }
    require_finite(y, who);
    const double n = y.norm();
    if (n < 1e-12) throw InvalidArgument(std::string(who) + ": zero feature vector");
    return y / n;
}

inline std::pair<std::size_t, double> argmin_with_margin(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[best]) best = i;
    }
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != best) second = std::min(second, values[i]);
    }
    return {best, std::isfinite(second) ? second - values[best] : 0.0};
}

}  // namespace detail

/// Sparse representation classification: normalize y, code it over the whole
/// dictionary, and pick the class whose atoms alone reconstruct it best.
inline SparseCode src_classify(const Dictionary& dict, const Vector& y, double lambda,
                               const HomotopyOptions& options = {}) {
    const Vector unit = detail::normalized_query(y, dict.feature_dim(), "src_classify");
    HomotopyResult h = homotopy_l1(dict, unit, lambda, options);
    SparseCode code;
    code.residuals = class_residuals(dict, h.z, unit);
    const auto [best, margin] = detail::argmin_with_margin(code.residuals);
    code.predicted_index = best;
    code.predicted = dict.class_ids()[best];
    code.margin = margin;
    code.objective = h.objective;
    code.lambda = lambda;
    code.status = h.status;
    code.z = std::move(h.z);
    return code;
}

struct NearestNeighbor {
    Eigen::Index atom = 0;
    std::size_t class_index = 0;
    ClassId predicted;
    double margin = 0.0;  // gap in squared distance to the best atom of the runner-up class
};

/// Label of the atom with the largest inner product with the normalized query
/// (ties go to the lowest column index).
inline NearestNeighbor nn_classify_detailed(const Dictionary& dict, const Vector& y) {
    const Vector unit = detail::normalized_query(y, dict.feature_dim(), "nn_classify");
    const Vector scores = dict.atoms().transpose() * unit;
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.size(); ++j) {
        if (scores(j) > scores(best)) best = j;
    }
    std::vector<double> class_best(dict.class_count(), std::numeric_limits<double>::infinity());
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
        double& slot = class_best[dict.class_index_of(j)];
        slot = std::min(slot, 2.0 - 2.0 * scores(j));
    }
    NearestNeighbor nn;
    nn.atom = best;
    nn.class_index = dict.class_index_of(best);
    nn.predicted = dict.class_ids()[nn.class_index];
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < class_best.size(); ++c) {
        if (c != nn.class_index) second = std::min(second, class_best[c]);
    }
    nn.margin = std::isfinite(second) ? second - class_best[nn.class_index] : 0.0;
    return nn;
}

inline ClassId nn_classify(const Dictionary& dict, const Vector& y) {
    return nn_classify_detailed(dict, y).predicted;
}

}  // namespace charrec
