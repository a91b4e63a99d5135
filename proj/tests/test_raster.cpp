#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/raster.hpp"
#include "support.hpp"

using namespace posterkit;

namespace {

// Reference convolution: every interior pixel of the rounded, clipped crop.
double naive_sobel(const GrayImage& img, int x0, int y0, int w, int h) {
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  if (w < 3 || h < 3) return 0.0;
  double sum = 0.0;
  int n = 0;
  for (int y = y0 + 1; y < y0 + h - 1; ++y) {
    for (int x = x0 + 1; x < x0 + w - 1; ++x) {
      double gx = 0, gy = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          gx += kx[dy + 1][dx + 1] * img.at(x + dx, y + dy);
          gy += ky[dy + 1][dx + 1] * img.at(x + dx, y + dy);
        }
      }
      sum += std::sqrt(gx * gx + gy * gy);
      ++n;
    }
  }
  return sum / n;
}

GrayImage random_gray(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (auto& p : px) p = static_cast<std::uint8_t>(v(rng));
  return GrayImage(w, h, std::move(px));
}

}  // namespace

TEST(Raster, MaxSobelConstant) {
  EXPECT_EQ(std::trunc(kMaxSobelMagnitude * 1000), 1442497.0);
  EXPECT_DOUBLE_EQ(kMaxSobelMagnitude, std::sqrt(2.0) * 4.0 * 255.0);
}

TEST(Raster, WhitePngLoadsAsRgb) {
  testsupport::TempDir dir;
  save_png(dir / "white.png", RasterImage(4, 4, PixelFormat::Rgb8, std::vector<std::uint8_t>(48, 255)));
  auto img = load_raster(dir / "white.png");
  EXPECT_EQ(img.width, 4);
  EXPECT_EQ(img.height, 4);
  EXPECT_EQ(img.format, PixelFormat::Rgb8);
  for (auto p : img.pixels) EXPECT_EQ(p, 255);
}

TEST(Raster, PngRoundTripKeepsAlpha) {
  testsupport::TempDir dir;
  std::vector<std::uint8_t> px = {1, 2, 3, 4, 5, 6, 7, 8};
  save_png(dir / "a.png", RasterImage(2, 1, PixelFormat::Rgba8, px));
  auto img = load_raster(dir / "a.png");
  EXPECT_EQ(img.format, PixelFormat::Rgba8);
  EXPECT_EQ(img.pixels, px);
}

TEST(Raster, TruncatedFileIsDecodeError) {
  testsupport::TempDir dir;
  save_png(dir / "a.png", GrayImage(32, 32, std::uint8_t{7}));
  auto bytes = read_file(dir / "a.png");
  write_file(dir / "cut.png", bytes.substr(0, bytes.size() / 2));
  try {
    load_raster(dir / "cut.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DecodeError);
  }
  write_file(dir / "junk.png", "not a png at all");
  EXPECT_THROW(load_raster(dir / "junk.png"), Error);
}

TEST(Raster, MissingFileIsIoError) {
  try {
    load_raster("/nonexistent/x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Raster, BufferSizeChecked) {
  EXPECT_THROW(RasterImage(2, 2, PixelFormat::Rgb8, std::vector<std::uint8_t>(11)), Error);
  EXPECT_THROW(RasterImage(0, 2, PixelFormat::Gray8, {}), Error);
}

TEST(Grayscale, KnownValues) {
  auto gray = [](std::vector<std::uint8_t> px, PixelFormat f) {
    return to_grayscale(RasterImage(1, 1, f, std::move(px))).pixels.at(0);
  };
  EXPECT_EQ(gray({255, 255, 255}, PixelFormat::Rgb8), 255);
  EXPECT_EQ(gray({255, 0, 0}, PixelFormat::Rgb8), static_cast<int>(std::lround(0.299 * 255)));
  EXPECT_EQ(gray({255, 0, 0}, PixelFormat::Rgb8), 76);
  EXPECT_EQ(gray({0, 0, 0, 0}, PixelFormat::Rgba8), 255);
  EXPECT_EQ(gray({0, 0, 0, 255}, PixelFormat::Rgba8), 0);
  EXPECT_EQ(gray({90}, PixelFormat::Gray8), 90);
}

TEST(Grayscale, RandomAgainstFormula) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> v(0, 255);
  for (int i = 0; i < 500; ++i) {
    double r = v(rng), g = v(rng), b = v(rng), a = v(rng);
    auto over = [&](double c) { return c * a / 255.0 + 255.0 * (1.0 - a / 255.0); };
    long expect = std::lround(0.299 * over(r) + 0.587 * over(g) + 0.114 * over(b));
    std::vector<std::uint8_t> px = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                    static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(a)};
    EXPECT_NEAR(to_grayscale(RasterImage(1, 1, PixelFormat::Rgba8, px)).pixels[0], expect, 1);
  }
}

TEST(Sobel, UniformCropIsZero) {
  GrayImage img(50, 50, std::uint8_t{128});
  EXPECT_DOUBLE_EQ(sobel_mean_magnitude(img, {0, 0, 50, 50}), 0.0);
}

TEST(Sobel, VerticalStepMatchesNaiveOracle) {
  std::vector<std::uint8_t> px(64);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) px[y * 8 + x] = x < 4 ? 0 : 255;
  }
  GrayImage img(8, 8, px);
  double got = sobel_mean_magnitude(img, {0, 0, 8, 8});
  EXPECT_NEAR(got, naive_sobel(img, 0, 0, 8, 8), 1e-9);
  EXPECT_NEAR(got, 2.0 * 4 * 255 / 6.0, 1e-9);
}

TEST(Sobel, CheckerboardStaysUnderBound) {
  std::vector<std::uint8_t> px(100);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) px[y * 10 + x] = (x + y) % 2 ? 255 : 0;
  }
  GrayImage img(10, 10, px);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      EXPECT_LE(sobel_mean_magnitude(img, {double(x), double(y), 3, 3}), kMaxSobelMagnitude + 1e-9);
    }
  }
}

TEST(Sobel, RandomCropsMatchNaiveOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    auto img = random_gray(rng, 16, 16);
    double got = sobel_mean_magnitude(img, {0, 0, 16, 16});
    EXPECT_NEAR(got, naive_sobel(img, 0, 0, 16, 16), 1e-9);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, kMaxSobelMagnitude);
  }
}

TEST(Sobel, SubRegionsMatchOracle) {
  std::mt19937_64 rng(12);
  auto img = random_gray(rng, 40, 30);
  std::uniform_int_distribution<int> pos(0, 25), size(3, 14);
  for (int i = 0; i < 100; ++i) {
    int x = pos(rng), y = pos(rng) % 16, w = size(rng), h = size(rng);
    EXPECT_NEAR(sobel_mean_magnitude(img, {double(x), double(y), double(w), double(h)}), naive_sobel(img, x, y, w, h),
                1e-9);
  }
}

TEST(Sobel, GradientSumCountsInteriorPixels) {
  GrayImage img(10, 10, std::uint8_t{0});
  auto s = sobel_gradient_sum(img, {0, 0, 10, 10});
  EXPECT_EQ(s.pixels, 64u);
  EXPECT_EQ(sobel_gradient_sum(img, {0, 0, 2, 10}).pixels, 0u);
}

TEST(Sobel, RegionRoundingAndClipping) {
  std::mt19937_64 rng(5);
  auto img = random_gray(rng, 20, 20);
  EXPECT_NEAR(sobel_mean_magnitude(img, {2.5, 3.4, 9.5, 7.5}), naive_sobel(img, 3, 3, 9, 8), 1e-9);
  EXPECT_NEAR(sobel_mean_magnitude(img, {-5, -5, 15, 15}), naive_sobel(img, 0, 0, 10, 10), 1e-9);
  EXPECT_NEAR(sobel_mean_magnitude(img, {15, 15, 50, 50}), naive_sobel(img, 15, 15, 5, 5), 1e-9);
}

TEST(Sobel, DegenerateCropIsZero) {
  std::mt19937_64 rng(5);
  auto img = random_gray(rng, 20, 20);
  EXPECT_DOUBLE_EQ(sobel_mean_magnitude(img, {4, 4, 2, 10}), 0.0);
  EXPECT_DOUBLE_EQ(sobel_mean_magnitude(img, {18, 4, 10, 10}), 0.0);
}

TEST(Sobel, DisjointRegionIsEmptyRegion) {
  GrayImage img(10, 10, std::uint8_t{0});
  try {
    sobel_mean_magnitude(img, {20, 20, 5, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
  }
}

TEST(Sobel, IntegerTranslationInvariance) {
  std::mt19937_64 rng(9);
  auto small = random_gray(rng, 12, 12);
  for (int dx : {0, 3, 7}) {
    for (int dy : {0, 2, 5}) {
      std::vector<std::uint8_t> px(30 * 30, 0);
      for (int y = 0; y < 12; ++y) {
        for (int x = 0; x < 12; ++x) px[(y + dy) * 30 + x + dx] = small.at(x, y);
      }
      GrayImage big(30, 30, px);
      EXPECT_DOUBLE_EQ(sobel_mean_magnitude(big, {double(dx), double(dy), 12, 12}),
                       sobel_mean_magnitude(small, {0, 0, 12, 12}));
    }
  }
}
