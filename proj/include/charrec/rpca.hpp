#pragma once

#include <charrec/error.hpp>
#include <charrec/image.hpp>
#include <charrec/matrix_ops.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace charrec {

/// Solver settings for min ||L||_* + lambda ||E||_1 s.t. X = L + E.
struct RpcaConfig {
    std::optional<double> lambda;  // unset: default_lambda(rows, cols)
    std::optional<double> mu0;     // unset: 1.25 / sigma_max(X), capped at mu_cap
    double rho = 1.5;
    double mu_cap = 1e5;
    double tol = 1e-7;
    int max_iter = 500;

    void validate() const {
        if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda)))
            throw InvalidArgument("RpcaConfig: lambda must be positive");
        if (mu0 && !(*mu0 > 0.0 && std::isfinite(*mu0)))
            throw InvalidArgument("RpcaConfig: mu0 must be positive");
        if (!(rho > 1.0 && std::isfinite(rho)))
            throw InvalidArgument("RpcaConfig: rho must exceed 1");
        if (!(mu_cap > 0.0 && std::isfinite(mu_cap)))
            throw InvalidArgument("RpcaConfig: mu_cap must be positive");
        if (mu0 && *mu0 > mu_cap)
            throw InvalidArgument("RpcaConfig: mu0 must not exceed mu_cap");
        if (!(tol > 0.0 && std::isfinite(tol)))
            throw InvalidArgument("RpcaConfig: tol must be positive");
        if (max_iter < 1) throw InvalidArgument("RpcaConfig: max_iter must be at least 1");
    }
};

struct RpcaResult {
    Matrix low_rank;
    Matrix sparse;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;  // ||X - L - E||_F / ||X||_F at exit
};

/// Snapshot handed to an observer after each outer iteration. `mu`, `prev_sparse`
/// and `multiplier` are the values the iteration started from; `low_rank` and
/// `sparse` are the updated primal blocks.
struct RpcaIterate {
    int iteration = 0;
    double lambda = 0.0;
    double mu = 0.0;
    double next_mu = 0.0;
    double residual = 0.0;
    const Matrix& observed;
    const Matrix& prev_sparse;
    const Matrix& multiplier;
    const Matrix& low_rank;
    const Matrix& sparse;
};

using RpcaObserver = std::function<void(const RpcaIterate&)>;

/// 1 / sqrt(max(rows, cols)).
inline double default_lambda(long long rows, long long cols) {
    if (rows < 1 || cols < 1) {
        throw InvalidArgument("default_lambda: dimensions must be positive");
    }
    return 1.0 / std::sqrt(static_cast<double>(std::max(rows, cols)));
}

/// Inexact augmented Lagrange multiplier iteration for robust PCA.
inline RpcaResult rpca_decompose(const Matrix& x, const RpcaConfig& config,
                                 const RpcaObserver& observer = {}) {
    config.validate();
    require_finite(x, "rpca_decompose");
    if (x.size() == 0) throw InvalidArgument("rpca_decompose: empty matrix");

    RpcaResult result;
    const double x_norm = x.norm();
    if (x_norm == 0.0) {
        result.low_rank = Matrix::Zero(x.rows(), x.cols());
        result.sparse = Matrix::Zero(x.rows(), x.cols());
        result.converged = true;
        return result;
    }

    const double lambda = config.lambda.value_or(default_lambda(x.rows(), x.cols()));
    double mu = 0.0;
    if (config.mu0) {
        mu = *config.mu0;
    } else {
        const double sigma_max = svd(x).s(0);
        mu = std::min(1.25 / sigma_max, config.mu_cap);
    }

    Matrix low_rank = Matrix::Zero(x.rows(), x.cols());
    Matrix sparse = Matrix::Zero(x.rows(), x.cols());
    Matrix multiplier = Matrix::Zero(x.rows(), x.cols());
    Matrix prev_sparse;
    Matrix prev_multiplier;

    for (int k = 1; k <= config.max_iter; ++k) {
        if (observer) {
            prev_sparse = sparse;
            prev_multiplier = multiplier;
        }
        const double inv_mu = 1.0 / mu;
        low_rank = svt(x - sparse + inv_mu * multiplier, inv_mu);
        sparse = soft_threshold_matrix(x - low_rank + inv_mu * multiplier, lambda * inv_mu);
        const Matrix gap = x - low_rank - sparse;
        multiplier += mu * gap;
        const double next_mu = std::min(config.rho * mu, config.mu_cap);

        result.iterations = k;
        result.residual = gap.norm() / x_norm;

        if (observer) {
            observer(RpcaIterate{k, lambda, mu, next_mu, result.residual, x, prev_sparse,
                                 prev_multiplier, low_rank, sparse});
        }
        mu = next_mu;
        if (result.residual <= config.tol) {
            result.converged = true;
            break;
        }
    }

    result.low_rank = std::move(low_rank);
    result.sparse = std::move(sparse);
    return result;
}

struct DenoisedImage {
    GrayImage clean;
    Matrix noise;
    RpcaResult decomposition;
};

/// Treats the pixel grid as one matrix, keeps the low-rank part (clamped to [0, 1])
/// as the clean image and returns the sparse part as noise.
inline DenoisedImage denoise_image(const GrayImage& img, const RpcaConfig& config,
                                   int expected_side = kDefaultImageSide) {
    if (!img.is_square() || img.rows() != expected_side) {
        throw InvalidArgument("denoise_image: expected a " + std::to_string(expected_side) + "x" +
                              std::to_string(expected_side) + " image, got " +
                              std::to_string(img.rows()) + "x" + std::to_string(img.cols()));
    }
    RpcaResult r = rpca_decompose(img.to_matrix(), config);
    DenoisedImage out{GrayImage::from_matrix_clamped(r.low_rank, img.label()), r.sparse, {}};
    out.decomposition = std::move(r);
    return out;
}

/// Batch mode: vectorizes same-sized images into the columns of one matrix,
/// decomposes it once and unstacks the clamped low-rank columns.
inline std::vector<GrayImage> denoise_batch(const std::vector<GrayImage>& images,
                                            const RpcaConfig& config,
                                            int expected_side = kDefaultImageSide) {
    if (images.empty()) return {};
    const Eigen::Index d = static_cast<Eigen::Index>(expected_side) * expected_side;
    Matrix stacked(d, static_cast<Eigen::Index>(images.size()));
    for (std::size_t j = 0; j < images.size(); ++j) {
        const GrayImage& img = images[j];
        if (!img.is_square() || img.rows() != expected_side) {
            throw InvalidArgument("denoise_batch: image " + std::to_string(j) + " is not " +
                                  std::to_string(expected_side) + "x" +
                                  std::to_string(expected_side));
        }
        for (Eigen::Index i = 0; i < d; ++i) {
            stacked(i, static_cast<Eigen::Index>(j)) = img.pixels()[static_cast<std::size_t>(i)];
        }
    }
    const RpcaResult r = rpca_decompose(stacked, config);
    std::vector<GrayImage> out;
    out.reserve(images.size());
    for (std::size_t j = 0; j < images.size(); ++j) {
        Matrix m(expected_side, expected_side);
        for (Eigen::Index i = 0; i < d; ++i) {
            m(i / expected_side, i % expected_side) = r.low_rank(i, static_cast<Eigen::Index>(j));
        }
        out.push_back(GrayImage::from_matrix_clamped(m, images[j].label()));
    }
    return out;
}

}  // namespace charrec
