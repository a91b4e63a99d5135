#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

#include "posterkit/geometry.hpp"

namespace posterkit {

enum class PixelFormat { Gray8, Rgb8, Rgba8 };

std::size_t channel_count(PixelFormat f);

/// Row-major interleaved 8-bit pixels.
struct RasterImage {
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::Rgb8;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  /// Throws InvalidArgument unless width, height > 0 and the buffer size matches.
  RasterImage(int width, int height, PixelFormat format, std::vector<std::uint8_t> pixels);
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);
  GrayImage(int width, int height, std::uint8_t fill);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Upper bound of a 3x3 Sobel magnitude on 8-bit input: sqrt(2) * 4 * 255.
inline constexpr double kMaxSobelMagnitude = std::numbers::sqrt2 * 4.0 * 255.0;

/// Decodes a PNG; alpha is kept. Throws IoError or DecodeError.
RasterImage load_raster(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const RasterImage& image);
void save_png(const std::filesystem::path& path, const GrayImage& image);

/// BT.601 luma, rounded, after compositing any alpha over white.
GrayImage to_grayscale(const RasterImage& image);

/// Sum of Sobel magnitudes over the interior of a cropped region, with the
/// number of pixels contributing.
struct GradientSum {
  double sum = 0.0;
  std::size_t pixels = 0;
};

/// Region edges round half away from zero and are clipped to the image.
/// The 1-pixel border ring of the crop is excluded; crops narrower than 3
/// pixels on a side yield {0, 0}. Throws EmptyRegion when the region misses
/// the image.
GradientSum sobel_gradient_sum(const GrayImage& image, const Rect& region);

/// Mean Sobel magnitude over the crop interior (0 for degenerate crops).
double sobel_mean_magnitude(const GrayImage& image, const Rect& region);

}  // namespace posterkit
