#include "posterkit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "posterkit/error.hpp"

namespace posterkit {

std::size_t channel_count(PixelFormat f) {
  switch (f) {
    case PixelFormat::Gray8: return 1;
    case PixelFormat::Rgb8: return 3;
    case PixelFormat::Rgba8: return 4;
  }
  return 1;
}

RasterImage::RasterImage(int w, int h, PixelFormat f, std::vector<std::uint8_t> px)
    : width(w), height(h), format(f), pixels(std::move(px)) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "raster dimensions must be > 0");
  if (pixels.size() != static_cast<std::size_t>(w) * h * channel_count(f)) {
    throw Error(ErrorCode::InvalidArgument, "raster buffer size does not match dimensions");
  }
}

GrayImage::GrayImage(int w, int h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be > 0");
  if (pixels.size() != static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::InvalidArgument, "gray buffer size does not match dimensions");
  }
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : GrayImage(w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(w, 0)) *
                                                    static_cast<std::size_t>(std::max(h, 0)),
                                                fill)) {}

RasterImage load_raster(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::IoError, "no such file " + path.string());
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::DecodeError, path.string() + ": " + image.message);
  }

  PixelFormat format;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (alpha) {
    image.format = PNG_FORMAT_RGBA;
    format = PixelFormat::Rgba8;
  } else if (color) {
    image.format = PNG_FORMAT_RGB;
    format = PixelFormat::Rgb8;
  } else {
    image.format = PNG_FORMAT_GRAY;
    format = PixelFormat::Gray8;
  }
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::DecodeError, path.string() + ": " + msg);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height), format,
                     std::move(buffer));
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height, png_uint_32 format,
               const std::uint8_t* data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace

void save_png(const std::filesystem::path& path, const RasterImage& img) {
  png_uint_32 format = img.format == PixelFormat::Gray8  ? PNG_FORMAT_GRAY
                       : img.format == PixelFormat::Rgb8 ? PNG_FORMAT_RGB
                                                         : PNG_FORMAT_RGBA;
  write_png(path, img.width, img.height, format, img.pixels.data());
}

void save_png(const std::filesystem::path& path, const GrayImage& img) {
  write_png(path, img.width, img.height, PNG_FORMAT_GRAY, img.pixels.data());
}

GrayImage to_grayscale(const RasterImage& img) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<std::uint8_t> out(n);
  const std::size_t ch = channel_count(img.format);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = &img.pixels[i * ch];
    if (img.format == PixelFormat::Gray8) {
      out[i] = p[0];
      continue;
    }
    double r = p[0], g = p[1], b = p[2];
    if (img.format == PixelFormat::Rgba8) {
      double a = p[3] / 255.0;
      r = 255.0 - (255.0 - r) * a;
      g = 255.0 - (255.0 - g) * a;
      b = 255.0 - (255.0 - b) * a;
    }
    double luma = std::round(0.299 * r + 0.587 * g + 0.114 * b);
    out[i] = static_cast<std::uint8_t>(std::clamp(luma, 0.0, 255.0));
  }
  return GrayImage(img.width, img.height, std::move(out));
}

GradientSum sobel_gradient_sum(const GrayImage& img, const Rect& region) {
  if (!region.finite()) throw Error(ErrorCode::EmptyRegion, "region is not finite");
  // std::round rounds half away from zero.
  double fx0 = std::round(region.x), fx1 = std::round(region.x + region.w);
  double fy0 = std::round(region.y), fy1 = std::round(region.y + region.h);
  long x0 = static_cast<long>(std::clamp(fx0, 0.0, static_cast<double>(img.width)));
  long x1 = static_cast<long>(std::clamp(fx1, 0.0, static_cast<double>(img.width)));
  long y0 = static_cast<long>(std::clamp(fy0, 0.0, static_cast<double>(img.height)));
  long y1 = static_cast<long>(std::clamp(fy1, 0.0, static_cast<double>(img.height)));
  if (x1 <= x0 || y1 <= y0) throw Error(ErrorCode::EmptyRegion, "region does not intersect the image");
  if (x1 - x0 < 3 || y1 - y0 < 3) return {};

  // Separable form: Gx = d/dx of the vertically smoothed column,
  // Gy = horizontal smoothing of the vertical difference.
  const long cols = x1 - x0;
  std::vector<int> smooth(static_cast<std::size_t>(cols));
  std::vector<int> diff(static_cast<std::size_t>(cols));
  GradientSum acc;
  for (long y = y0 + 1; y + 1 < y1; ++y) {
    const std::uint8_t* above = &img.pixels[static_cast<std::size_t>(y - 1) * img.width];
    const std::uint8_t* row = &img.pixels[static_cast<std::size_t>(y) * img.width];
    const std::uint8_t* below = &img.pixels[static_cast<std::size_t>(y + 1) * img.width];
    for (long c = 0; c < cols; ++c) {
      long x = x0 + c;
      smooth[c] = above[x] + 2 * row[x] + below[x];
      diff[c] = below[x] - above[x];
    }
    for (long c = 1; c + 1 < cols; ++c) {
      int gx = smooth[c + 1] - smooth[c - 1];
      int gy = diff[c - 1] + 2 * diff[c] + diff[c + 1];
      acc.sum += std::sqrt(static_cast<double>(gx * gx + gy * gy));
      ++acc.pixels;
    }
  }
  return acc;
}

double sobel_mean_magnitude(const GrayImage& img, const Rect& region) {
  auto s = sobel_gradient_sum(img, region);
  return s.pixels == 0 ? 0.0 : s.sum / static_cast<double>(s.pixels);
}

}  // namespace posterkit
