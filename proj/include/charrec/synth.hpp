#pragma once

#include <charrec/error.hpp>
#include <charrec/image.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace charrec {

namespace detail {

struct GlyphBitmap {
    char symbol;
    std::array<std::string_view, 7> rows;  // 5 columns each, '#' is ink
};

// clang-format off
inline constexpr std::array<GlyphBitmap, 36> kGlyphFont{{
    {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
    {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
    {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
    {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
    {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
    {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
    {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
    {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
    {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
    {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
    {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
    {'D', {"###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."}},
    {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
    {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
    {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
    {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
    {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
    {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
    {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
    {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
    {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
    {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
    {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
    {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
    {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
    {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
    {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
    {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
    {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
    {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
}};
// clang-format on

inline const GlyphBitmap& find_glyph(char symbol) {
    for (const GlyphBitmap& g : kGlyphFont) {
        if (g.symbol == symbol) return g;
    }
    throw InvalidArgument(std::string("unknown glyph '") + symbol +
                          "'; supported glyphs are 0-9 and A-Z");
}

}  // namespace detail

/// Glyphs the generator can render, in canonical order.
inline std::string supported_glyphs() {
    std::string out;
    for (const auto& g : detail::kGlyphFont) out.push_back(g.symbol);
    return out;
}

struct GlyphJitter {
    double scale = 1.0;         // multiplicative
    double rotation_deg = 0.0;  // counter-clockwise
    double shift_x = 0.0;       // pixels
    double shift_y = 0.0;
};

struct JitterRange {
    double scale = 0.10;         // scale drawn from [1 - scale, 1 + scale]
    double rotation_deg = 10.0;  // rotation drawn from [-rotation_deg, rotation_deg]
    double shift_px = 2.0;       // each shift drawn from [-shift_px, shift_px]
};

struct GlyphStyle {
    int side = kDefaultImageSide;
    double background = 0.85;
    double ink = 0.15;
    int supersample = 4;  // per axis
};

struct NoiseSpec {
    double gaussian_sigma = 0.0;
    double salt_pepper = 0.0;  // per-pixel replacement probability

    void validate() const {
        if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma))
            throw InvalidArgument("NoiseSpec: gaussian sigma must be nonnegative");
        if (!(salt_pepper >= 0.0 && salt_pepper <= 1.0))
            throw InvalidArgument("NoiseSpec: salt-and-pepper fraction must lie in [0, 1]");
    }
};

/// Renders a 5x7 block-font glyph centered in a side x side frame (dark ink on a
/// light background), supersampled for anti-aliasing, under the given affine jitter.
inline GrayImage render_glyph(char symbol, const GlyphJitter& jitter = {},
                              const GlyphStyle& style = {}) {
    const detail::GlyphBitmap& glyph = detail::find_glyph(symbol);
    if (style.side < 8) throw InvalidArgument("render_glyph: side too small");
    if (style.supersample < 1) throw InvalidArgument("render_glyph: supersample must be positive");
    if (!(jitter.scale > 0.0)) throw InvalidArgument("render_glyph: scale must be positive");

    // Glyph cells are square; the 5x7 grid spans 7/8 of the frame height.
    const double cell = style.side * 0.875 / 7.0;
    const double half_w = 2.5 * cell;
    const double half_h = 3.5 * cell;
    const double center = style.side / 2.0;
    const double theta = jitter.rotation_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const int ss = style.supersample;
    const double inv_ss2 = 1.0 / (ss * ss);

    std::vector<double> px(static_cast<std::size_t>(style.side) * style.side);
    for (int r = 0; r < style.side; ++r) {
        for (int c = 0; c < style.side; ++c) {
            int hits = 0;
            for (int sy = 0; sy < ss; ++sy) {
                for (int sx = 0; sx < ss; ++sx) {
                    // Inverse map: frame -> glyph coordinates.
                    const double x = c + (sx + 0.5) / ss - center - jitter.shift_x;
                    const double y = r + (sy + 0.5) / ss - center - jitter.shift_y;
                    const double gx = (cs * x + sn * y) / jitter.scale + half_w;
                    const double gy = (-sn * x + cs * y) / jitter.scale + half_h;
                    if (gx < 0.0 || gy < 0.0) continue;
                    const auto col = static_cast<std::size_t>(gx / cell);
                    const auto row = static_cast<std::size_t>(gy / cell);
                    if (row < 7 && col < 5 && glyph.rows[row][col] == '#') ++hits;
                }
            }
            const double coverage = hits * inv_ss2;
            px[static_cast<std::size_t>(r * style.side + c)] =
                style.background + (style.ink - style.background) * coverage;
        }
    }
    return GrayImage(style.side, style.side, std::move(px), std::string(1, symbol));
}

template <class Rng>
GlyphJitter sample_jitter(const JitterRange& range, Rng& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    GlyphJitter j;
    j.scale = 1.0 + range.scale * unit(rng);
    j.rotation_deg = range.rotation_deg * unit(rng);
    j.shift_x = range.shift_px * unit(rng);
    j.shift_y = range.shift_px * unit(rng);
    return j;
}

/// Adds clamped Gaussian noise, then replaces each pixel with probability
/// `salt_pepper` by 0 or 1 (equally likely). Returns the replaced-pixel mask.
template <class Rng>
std::vector<bool> apply_noise(GrayImage& img, const NoiseSpec& noise, Rng& rng) {
    noise.validate();
    std::vector<double> px = img.pixels();
    if (noise.gaussian_sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise.gaussian_sigma);
        for (double& p : px) p = std::clamp(p + gauss(rng), 0.0, 1.0);
    }
    std::vector<bool> mask(px.size(), false);
    if (noise.salt_pepper > 0.0) {
        std::bernoulli_distribution hit(noise.salt_pepper);
        std::bernoulli_distribution salt(0.5);
        for (std::size_t i = 0; i < px.size(); ++i) {
            if (hit(rng)) {
                mask[i] = true;
                px[i] = salt(rng) ? 1.0 : 0.0;
            }
        }
    }
    img = GrayImage(img.rows(), img.cols(), std::move(px), img.label());
    return mask;
}

/// Deterministic per-sample engine so every image depends only on (seed, class, index).
inline std::mt19937_64 sample_engine(std::uint64_t seed, std::size_t class_index,
                                     std::size_t sample_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(class_index),
                      static_cast<std::uint32_t>(sample_index)};
    return std::mt19937_64(seq);
}

}  // namespace charrec
