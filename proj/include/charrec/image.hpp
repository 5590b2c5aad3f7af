#pragma once

#include <charrec/error.hpp>
#include <charrec/matrix_ops.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace charrec {

/// Default working resolution of the recognition pipeline.
inline constexpr int kDefaultImageSide = 32;

/// Grayscale raster with intensities in [0, 1], stored row-major.
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int rows, int cols, double fill = 0.0, std::optional<std::string> label = std::nullopt)
        : rows_(rows), cols_(cols), label_(std::move(label)) {
        if (rows <= 0 || cols <= 0) {
            throw InvalidArgument("GrayImage: dimensions must be positive");
        }
        check_intensity(fill);
        pixels_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
    }

    GrayImage(int rows, int cols, std::vector<double> pixels,
              std::optional<std::string> label = std::nullopt)
        : rows_(rows), cols_(cols), pixels_(std::move(pixels)), label_(std::move(label)) {
        if (rows <= 0 || cols <= 0) {
            throw InvalidArgument("GrayImage: dimensions must be positive");
        }
        if (pixels_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
            throw InvalidArgument("GrayImage: pixel count does not match dimensions");
        }
        for (double p : pixels_) check_intensity(p);
    }

    /// Builds an image from a matrix, clamping entries into [0, 1].
    static GrayImage from_matrix_clamped(const Eigen::Ref<const Matrix>& m,
                                         std::optional<std::string> label = std::nullopt) {
        require_finite(m, "GrayImage::from_matrix_clamped");
        std::vector<double> px(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                px[static_cast<std::size_t>(r * m.cols() + c)] = std::clamp(m(r, c), 0.0, 1.0);
            }
        }
        return GrayImage(static_cast<int>(m.rows()), static_cast<int>(m.cols()), std::move(px),
                         std::move(label));
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double at(int r, int c) const { return pixels_[index(r, c)]; }
    void set(int r, int c, double v) {
        check_intensity(v);
        pixels_[index(r, c)] = v;
    }

    const std::vector<double>& pixels() const noexcept { return pixels_; }

    const std::optional<std::string>& label() const noexcept { return label_; }
    void set_label(std::optional<std::string> label) { label_ = std::move(label); }

    Matrix to_matrix() const {
        Matrix m(rows_, cols_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) m(r, c) = at(r, c);
        return m;
    }

    GrayImage flipped_horizontally() const {
        GrayImage out(*this);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) out.pixels_[index(r, c)] = at(r, cols_ - 1 - c);
        return out;
    }

    GrayImage transposed() const {
        GrayImage out(cols_, rows_, 0.0, label_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) out.pixels_[out.index(c, r)] = at(r, c);
        return out;
    }

    /// Multiplies every intensity by `gain` in [0, 1].
    GrayImage scaled(double gain) const {
        if (!(gain >= 0.0 && gain <= 1.0)) {
            throw InvalidArgument("GrayImage::scaled: gain must lie in [0, 1]");
        }
        GrayImage out(*this);
        for (double& p : out.pixels_) p *= gain;
        return out;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(c);
    }

    static void check_intensity(double v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument("GrayImage: intensity outside [0, 1]");
        }
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> pixels_;
    std::optional<std::string> label_;
};

}  // namespace charrec
