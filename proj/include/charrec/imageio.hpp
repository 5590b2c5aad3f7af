#pragma once

#include <charrec/error.hpp>
#include <charrec/image.hpp>

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace charrec {

/// ITU-R BT.601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace detail {

class NetpbmReader {
public:
    NetpbmReader(std::vector<unsigned char> bytes, std::string source)
        : bytes_(std::move(bytes)), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw IoError(source_ + ": " + what);
    }

    // Header tokens are separated by whitespace; '#' starts a comment to end of line.
    std::string token(const char* at_end = "truncated header") {
        while (pos_ < bytes_.size()) {
            const unsigned char ch = bytes_[pos_];
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(ch)) {
                ++pos_;
            } else {
                break;
            }
        }
        std::string out;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
            out.push_back(static_cast<char>(bytes_[pos_++]));
        }
        if (out.empty()) fail(at_end);
        return out;
    }

    long number(const char* at_end = "truncated header") {
        const std::string t = token(at_end);
        if (!std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
            fail("malformed header value '" + t + "'");
        try {
            return std::stol(t);
        } catch (const std::exception&) {
            fail("header value out of range '" + t + "'");
        }
    }

    // Exactly one whitespace byte separates the header from binary data.
    void skip_single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("truncated header");
        ++pos_;
    }

    unsigned sample_binary(bool wide) {
        const std::size_t need = wide ? 2 : 1;
        if (pos_ + need > bytes_.size()) fail("truncated pixel data");
        unsigned v = bytes_[pos_++];
        if (wide) v = (v << 8) | bytes_[pos_++];
        return v;
    }

private:
    std::vector<unsigned char> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline GrayImage decode_netpbm(std::vector<unsigned char> bytes, const std::string& source) {
    NetpbmReader rd(std::move(bytes), source);
    const std::string magic = rd.token();
    const bool ascii = magic == "P2" || magic == "P3";
    const bool color = magic == "P3" || magic == "P6";
    if (magic != "P2" && magic != "P5" && magic != "P3" && magic != "P6")
        rd.fail("unsupported netpbm variant " + magic);
    const long width = rd.number();
    const long height = rd.number();
    const long maxval = rd.number();
    if (width <= 0 || height <= 0) rd.fail("zero-dimension image");
    if (maxval <= 0 || maxval > 65535) rd.fail("invalid maxval");
    if (!ascii) rd.skip_single_whitespace();

    const bool wide = maxval > 255;
    const double scale = 1.0 / static_cast<double>(maxval);
    auto sample = [&]() -> double {
        long v = 0;
        if (ascii) {
            v = rd.number("truncated pixel data");
        } else {
            v = static_cast<long>(rd.sample_binary(wide));
        }
        if (v > maxval) rd.fail("sample exceeds maxval");
        return static_cast<double>(v) * scale;
    };

    std::vector<double> px(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (double& p : px) {
        if (color) {
            const double r = sample();
            const double g = sample();
            const double b = sample();
            p = std::clamp(luma(r, g, b), 0.0, 1.0);
        } else {
            p = sample();
        }
    }
    return GrayImage(static_cast<int>(height), static_cast<int>(width), std::move(px));
}

inline GrayImage decode_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    const std::vector<unsigned char> bytes = read_bytes(path);
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(path.string() + ": PNG decode failed (" + image.message + ")");
    }
    image.format = PNG_FORMAT_RGB;
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw IoError(path.string() + ": zero-dimension image");
    }
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError(path.string() + ": PNG decode failed (" + msg + ")");
    }
    std::vector<double> px(static_cast<std::size_t>(image.width) * image.height);
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = std::clamp(luma(buffer[3 * i] / 255.0, buffer[3 * i + 1] / 255.0,
                                buffer[3 * i + 2] / 255.0),
                           0.0, 1.0);
    }
    return GrayImage(static_cast<int>(image.height), static_cast<int>(image.width), std::move(px));
}

}  // namespace detail

/// Reads PGM (P2/P5), PPM (P3/P6) or PNG and converts to luma in [0, 1].
/// The format is detected from the file's magic bytes.
inline GrayImage load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError(path.string() + ": no such file");
    std::vector<unsigned char> bytes = detail::read_bytes(path);
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
        return detail::decode_png(path);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        return detail::decode_netpbm(std::move(bytes), path.string());
    }
    throw IoError(path.string() + ": unsupported image format");
}

/// Writes an 8-bit binary PGM. `comment` lines are placed in the header.
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img,
                      const std::string& comment = {}) {
    std::string out = "P5\n";
    if (!comment.empty()) out += "# " + comment + "\n";
    out += std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
    out.reserve(out.size() + img.pixels().size());
    for (double p : img.pixels()) {
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path.string() + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError(path.string() + ": write failed");
}

/// Bilinear resampling with pixel-center alignment: source coordinate
/// (dst + 0.5) * scale - 0.5, clamped to the source grid.
inline GrayImage resize_bilinear(const GrayImage& img, int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw InvalidArgument("resize_bilinear: target must be positive");
    if (rows == img.rows() && cols == img.cols()) return img;
    const double sy = static_cast<double>(img.rows()) / rows;
    const double sx = static_cast<double>(img.cols()) / cols;
    std::vector<double> px(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.rows() - 1.0);
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, img.rows() - 1);
        const double wy = fy - y0;
        for (int c = 0; c < cols; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.cols() - 1.0);
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, img.cols() - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * img.at(y0, x0) + wx * img.at(y0, x1);
            const double bottom = (1.0 - wx) * img.at(y1, x0) + wx * img.at(y1, x1);
            px[static_cast<std::size_t>(r * cols + c)] =
                std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
        }
    }
    return GrayImage(rows, cols, std::move(px), img.label());
}

inline GrayImage resize_bilinear(const GrayImage& img, int side = kDefaultImageSide) {
    return resize_bilinear(img, side, side);
}

}  // namespace charrec
