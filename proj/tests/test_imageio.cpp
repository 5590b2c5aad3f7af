#include <charrec/imageio.hpp>
#include <charrec/serialize.hpp>

#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <png.h>

#include <random>

using namespace charrec;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) { write_text_file(p, bytes); }

void write_rgb_png(const std::filesystem::path& p, int w, int h, const std::vector<unsigned char>& rgb) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_RGB;
    ASSERT_TRUE(png_image_write_to_file(&image, p.c_str(), 0, rgb.data(), 0, nullptr)) << image.message;
}

void expect_error_mentions(const std::filesystem::path& p, const std::string& fragment) {
    try {
        load_image(p);
        FAIL() << "expected an error for " << p;
    } catch (const IoError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find(p.string()), std::string::npos) << msg;
        EXPECT_NE(msg.find(fragment), std::string::npos) << msg;
    }
}

}  // namespace

TEST(Luma, Weights) {
    EXPECT_DOUBLE_EQ(luma(1, 0, 0), 0.299);
    EXPECT_DOUBLE_EQ(luma(0, 1, 0), 0.587);
    EXPECT_DOUBLE_EQ(luma(0, 0, 1), 0.114);
    EXPECT_NEAR(luma(1, 1, 1), 1.0, 1e-15);
}

TEST(LoadImage, BinaryPgmFullWhite) {
    TempDir dir;
    write_bytes(dir / "w.pgm", "P5\n3 2\n255\n" + std::string(6, '\xff'));
    const GrayImage img = load_image(dir / "w.pgm");
    EXPECT_EQ(img.rows(), 2);
    EXPECT_EQ(img.cols(), 3);
    for (double p : img.pixels()) EXPECT_EQ(p, 1.0);
}

TEST(LoadImage, AsciiPgmWithComments) {
    TempDir dir;
    write_bytes(dir / "a.pgm", "P2\n# made by hand\n2 2 # dims\n4\n0 1\n2 4\n");
    const GrayImage img = load_image(dir / "a.pgm");
    EXPECT_EQ(img.at(0, 0), 0.0);
    EXPECT_EQ(img.at(0, 1), 0.25);
    EXPECT_EQ(img.at(1, 0), 0.5);
    EXPECT_EQ(img.at(1, 1), 1.0);
}

TEST(LoadImage, SixteenBitPgm) {
    TempDir dir;
    std::string data = "P5\n1 1\n65535\n";
    data += '\x80';
    data += '\x00';
    write_bytes(dir / "d.pgm", data);
    EXPECT_DOUBLE_EQ(load_image(dir / "d.pgm").at(0, 0), 32768.0 / 65535.0);
}

TEST(LoadImage, ColorInputsUseLuma) {
    TempDir dir;
    write_bytes(dir / "r.ppm", std::string("P6\n1 1\n255\n") + '\xff' + '\x00' + '\x00');
    EXPECT_DOUBLE_EQ(load_image(dir / "r.ppm").at(0, 0), 0.299);
    write_bytes(dir / "g.ppm", "P3 1 1 255 0 255 0\n");
    EXPECT_DOUBLE_EQ(load_image(dir / "g.ppm").at(0, 0), 0.587);
    write_rgb_png(dir / "r.png", 2, 1, {255, 0, 0, 0, 0, 255});
    const GrayImage png = load_image(dir / "r.png");
    EXPECT_DOUBLE_EQ(png.at(0, 0), 0.299);
    EXPECT_DOUBLE_EQ(png.at(0, 1), 0.114);
}

TEST(LoadImage, GrayPngRoundTrip) {
    TempDir dir;
    std::vector<unsigned char> rgb;
    for (int i = 0; i < 12; ++i) rgb.insert(rgb.end(), 3, static_cast<unsigned char>(i * 20));
    write_rgb_png(dir / "g.png", 4, 3, rgb);
    const GrayImage img = load_image(dir / "g.png");
    ASSERT_EQ(img.rows(), 3);
    ASSERT_EQ(img.cols(), 4);
    for (int i = 0; i < 12; ++i) EXPECT_NEAR(img.pixels()[static_cast<std::size_t>(i)], i * 20 / 255.0, 1e-12);
}

TEST(LoadImage, ErrorsNameThePath) {
    TempDir dir;
    write_bytes(dir / "trunc.pgm", "P5\n4 4\n255\n" + std::string(10, '\x10'));
    expect_error_mentions(dir / "trunc.pgm", "truncated");
    write_bytes(dir / "trunc_ascii.pgm", "P2\n2 2\n255\n1 2 3\n");
    expect_error_mentions(dir / "trunc_ascii.pgm", "truncated");
    write_bytes(dir / "header.pgm", "P5\n4");
    expect_error_mentions(dir / "header.pgm", "truncated");
    write_bytes(dir / "zero.pgm", "P5\n0 4\n255\n");
    expect_error_mentions(dir / "zero.pgm", "zero-dimension");
    write_bytes(dir / "what.bmp", "BM not supported");
    expect_error_mentions(dir / "what.bmp", "unsupported");
    write_bytes(dir / "bad.png", "\x89PNG\r\n\x1a\n garbage");
    expect_error_mentions(dir / "bad.png", "PNG");
    write_bytes(dir / "p4.pbm", "P4\n1 1\n\x80");
    expect_error_mentions(dir / "p4.pbm", "unsupported");
    expect_error_mentions(dir / "missing.pgm", "no such file");
}

TEST(WritePgm, RoundTripsEightBitValues) {
    TempDir dir;
    std::vector<double> px;
    for (int i = 0; i < 16; ++i) px.push_back(i * 17 / 255.0);
    const GrayImage img(4, 4, px);
    write_pgm(dir / "o.pgm", img, "made in a test");
    const GrayImage back = load_image(dir / "o.pgm");
    for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(back.pixels()[i], px[i], 1e-12);
    EXPECT_NE(read_text_file(dir / "o.pgm").find("# made in a test"), std::string::npos);
}

TEST(Resize, ConstantStaysConstant) {
    for (auto [r, c] : {std::pair{7, 13}, std::pair{100, 64}, std::pair{32, 32}, std::pair{1, 1}}) {
        const GrayImage out = resize_bilinear(GrayImage(r, c, 0.37));
        ASSERT_EQ(out.rows(), 32);
        for (double p : out.pixels()) EXPECT_NEAR(p, 0.37, 1e-15);
    }
}

TEST(Resize, IdentityAtSameSize) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> px(1024);
    for (double& p : px) p = u(rng);
    const GrayImage img(32, 32, px, std::string("q"));
    const GrayImage out = resize_bilinear(img);
    for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(out.pixels()[i], px[i], 1e-12);
    EXPECT_EQ(out.label(), img.label());
}

TEST(Resize, DownsampleStaysWithinNeighborhood) {
    GrayImage big(64, 64, 0.0);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) big.set(r, c, ((r / 2 + c / 2) % 2) ? 0.9 : 0.1);
    const GrayImage small = resize_bilinear(big, 32);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
            double lo = 1, hi = 0;
            for (int y = std::max(0, 2 * r - 1); y <= std::min(63, 2 * r + 2); ++y)
                for (int x = std::max(0, 2 * c - 1); x <= std::min(63, 2 * c + 2); ++x) {
                    lo = std::min(lo, big.at(y, x));
                    hi = std::max(hi, big.at(y, x));
                }
            EXPECT_GE(small.at(r, c), lo - 1e-15);
            EXPECT_LE(small.at(r, c), hi + 1e-15);
        }
    }
}

TEST(Resize, PixelCenterAlignment) {
    // Upsampling 2 -> 4: destination centers map to -0.25, 0.25, 0.75, 1.25 (clamped).
    const GrayImage src(1, 2, std::vector<double>{0.0, 1.0});
    const GrayImage out = resize_bilinear(src, 1, 4);
    EXPECT_DOUBLE_EQ(out.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(out.at(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(out.at(0, 2), 0.75);
    EXPECT_DOUBLE_EQ(out.at(0, 3), 1.0);
}
