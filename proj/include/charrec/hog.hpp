#pragma once

#include <charrec/error.hpp>
#include <charrec/image.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace charrec {

struct HogConfig {
    int cell_size = 8;
    int bins = 9;
    int block_size = 2;    // cells per block side
    int block_stride = 1;  // in cells
    bool signed_orientation = false;
    double norm_epsilon = 1e-6;

    double orientation_range() const { return signed_orientation ? 360.0 : 180.0; }

    /// Throws unless the geometry tiles a side x side image.
    void validate(int side) const {
        if (cell_size < 1 || bins < 1 || block_size < 1 || block_stride < 1)
            throw InvalidArgument("HogConfig: sizes and counts must be positive");
        if (!(norm_epsilon > 0.0 && std::isfinite(norm_epsilon)))
            throw InvalidArgument("HogConfig: norm_epsilon must be positive");
        if (side < 1 || side % cell_size != 0)
            throw InvalidArgument("HogConfig: image side " + std::to_string(side) +
                                  " is not divisible by cell size " + std::to_string(cell_size));
        if (block_size > side / cell_size)
            throw InvalidArgument("HogConfig: block larger than the cell grid");
    }
};

struct HogLayout {
    int blocks_y = 0;
    int blocks_x = 0;
    int cells_per_block = 0;
    int bins = 0;

    std::size_t length() const {
        return static_cast<std::size_t>(blocks_y) * static_cast<std::size_t>(blocks_x) *
               static_cast<std::size_t>(cells_per_block) * static_cast<std::size_t>(bins);
    }
};

inline HogLayout hog_layout(int rows, int cols, const HogConfig& config) {
    config.validate(rows);
    config.validate(cols);
    const int cells_y = rows / config.cell_size;
    const int cells_x = cols / config.cell_size;
    return HogLayout{(cells_y - config.block_size) / config.block_stride + 1,
                     (cells_x - config.block_size) / config.block_stride + 1,
                     config.block_size * config.block_size, config.bins};
}

struct HogDescriptor {
    std::vector<double> values;  // (blocks_y, blocks_x, cell in block, bin), row-major
    HogLayout layout;
};

struct GradientField {
    int rows = 0;
    int cols = 0;
    std::vector<double> magnitude;    // row-major
    std::vector<double> orientation;  // degrees in [0, orientation range)

    double magnitude_at(int r, int c) const { return magnitude[static_cast<std::size_t>(r * cols + c)]; }
    double orientation_at(int r, int c) const {
        return orientation[static_cast<std::size_t>(r * cols + c)];
    }
};

/// Central differences (I[x+1] - I[x-1]) / 2 with replicated borders.
inline GradientField gradients(const GrayImage& img, bool signed_orientation = false) {
    const int rows = img.rows();
    const int cols = img.cols();
    const double range = signed_orientation ? 360.0 : 180.0;
    GradientField g{rows, cols, std::vector<double>(img.pixels().size()),
                    std::vector<double>(img.pixels().size())};
    for (int r = 0; r < rows; ++r) {
        const int up = r > 0 ? r - 1 : 0;
        const int down = r + 1 < rows ? r + 1 : rows - 1;
        for (int c = 0; c < cols; ++c) {
            const int left = c > 0 ? c - 1 : 0;
            const int right = c + 1 < cols ? c + 1 : cols - 1;
            const double gx = 0.5 * (img.at(r, right) - img.at(r, left));
            const double gy = 0.5 * (img.at(down, c) - img.at(up, c));
            double angle = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
            angle = std::fmod(angle, range);
            if (angle < 0.0) angle += range;
            if (angle >= range) angle -= range;
            const auto i = static_cast<std::size_t>(r * cols + c);
            g.magnitude[i] = std::hypot(gx, gy);
            g.orientation[i] = angle;
        }
    }
    return g;
}

/// Per-cell orientation histograms, cells in row-major order, `bins` entries each.
/// Every pixel splits its magnitude between the two bins whose centers bracket its
/// angle, weighted linearly by angular distance (with wrap-around).
struct CellGrid {
    int cells_y = 0;
    int cells_x = 0;
    int bins = 0;
    std::vector<double> values;

    double at(int cy, int cx, int bin) const {
        return values[(static_cast<std::size_t>(cy) * static_cast<std::size_t>(cells_x) +
                       static_cast<std::size_t>(cx)) *
                          static_cast<std::size_t>(bins) +
                      static_cast<std::size_t>(bin)];
    }
};

inline CellGrid cell_histograms(const GradientField& g, const HogConfig& config) {
    config.validate(g.rows);
    config.validate(g.cols);
    CellGrid grid{g.rows / config.cell_size, g.cols / config.cell_size, config.bins, {}};
    grid.values.assign(static_cast<std::size_t>(grid.cells_y * grid.cells_x * grid.bins), 0.0);
    const double bin_width = config.orientation_range() / config.bins;

    for (int r = 0; r < g.rows; ++r) {
        const int cy = r / config.cell_size;
        for (int c = 0; c < g.cols; ++c) {
            const double mag = g.magnitude_at(r, c);
            if (mag == 0.0) continue;
            const int cx = c / config.cell_size;
            // Bin b is centered at (b + 0.5) * bin_width.
            const double pos = g.orientation_at(r, c) / bin_width - 0.5;
            const double lo_f = std::floor(pos);
            const double frac = pos - lo_f;
            int lo = static_cast<int>(lo_f) % config.bins;
            if (lo < 0) lo += config.bins;
            const int hi = (lo + 1) % config.bins;
            const std::size_t base =
                static_cast<std::size_t>((cy * grid.cells_x + cx) * grid.bins);
            grid.values[base + static_cast<std::size_t>(lo)] += mag * (1.0 - frac);
            grid.values[base + static_cast<std::size_t>(hi)] += mag * frac;
        }
    }
    return grid;
}

/// Sliding blocks of cells, each L2-normalized as v / sqrt(||v||^2 + eps^2).
inline HogDescriptor hog_descriptor(const GrayImage& img, const HogConfig& config = {}) {
    const HogLayout layout = hog_layout(img.rows(), img.cols(), config);
    const CellGrid grid = cell_histograms(gradients(img, config.signed_orientation), config);

    HogDescriptor d;
    d.layout = layout;
    d.values.reserve(layout.length());
    const std::size_t block_len =
        static_cast<std::size_t>(layout.cells_per_block) * static_cast<std::size_t>(config.bins);
    const double eps2 = config.norm_epsilon * config.norm_epsilon;

    for (int by = 0; by < layout.blocks_y; ++by) {
        for (int bx = 0; bx < layout.blocks_x; ++bx) {
            const std::size_t start = d.values.size();
            for (int iy = 0; iy < config.block_size; ++iy) {
                for (int ix = 0; ix < config.block_size; ++ix) {
                    const int cy = by * config.block_stride + iy;
                    const int cx = bx * config.block_stride + ix;
                    for (int b = 0; b < config.bins; ++b) d.values.push_back(grid.at(cy, cx, b));
                }
            }
            double sq = 0.0;
            for (std::size_t i = start; i < start + block_len; ++i) sq += d.values[i] * d.values[i];
            const double scale = 1.0 / std::sqrt(sq + eps2);
            for (std::size_t i = start; i < start + block_len; ++i) d.values[i] *= scale;
        }
    }
    return d;
}

}  // namespace charrec
