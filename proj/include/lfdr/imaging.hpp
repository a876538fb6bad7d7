#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lfdr {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major, three interleaved channels.
class RasterImage {
 public:
  RasterImage(int width, int height, Rgb fill = {0, 0, 0});
  RasterImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(int x, int y, int c) const noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::uint8_t& at(int x, int y, int c) noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  /// Rec. 601 luma of one pixel.
  double luma(int x, int y) const noexcept;

  bool operator==(const RasterImage&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

inline constexpr int kStripWidth = 300;
inline constexpr int kStripHeight = 875;

/// A RasterImage that is always exactly 300x875 with the strip's long axis
/// vertical.
class StripImage {
 public:
  explicit StripImage(RasterImage raster);
  static StripImage filled(Rgb fill);

  const RasterImage& raster() const noexcept { return raster_; }
  int width() const noexcept { return kStripWidth; }
  int height() const noexcept { return kStripHeight; }
  std::uint8_t at(int x, int y, int c) const noexcept { return raster_.at(x, y, c); }
  double luma(int x, int y) const noexcept { return raster_.luma(x, y); }

  bool operator==(const StripImage&) const = default;

 private:
  RasterImage raster_;
};

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline double luma_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return kLumaR * r + kLumaG * g + kLumaB * b;
}

/// Per-pixel luma of the whole image, row-major.
std::vector<float> luma_plane(const RasterImage& img);

// Codecs. Decoding accepts PNG and JPEG only; grayscale is expanded to three
// identical channels and alpha is discarded.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage read_image_file(const std::string& path);
std::vector<std::uint8_t> encode_png(const RasterImage& img);
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality = 95);
void write_png_file(const RasterImage& img, const std::string& path);

/// Samples the image at fractional pixel-index coordinates with bilinear
/// weights, clamping to the border.
void sample_bilinear(const RasterImage& img, double fx, double fy, double out[3]) noexcept;

RasterImage resize(const RasterImage& img, int width, int height);

/// Rotates counter-clockwise (as displayed) about the image center by
/// `degrees`. The canvas grows to hold the rotated frame; uncovered pixels
/// take `background`.
RasterImage rotate(const RasterImage& img, double degrees, Rgb background = {0, 0, 0});

/// Exact quarter turn counter-clockwise, no resampling.
RasterImage rotate90_ccw(const RasterImage& img);

RasterImage crop(const RasterImage& img, int x, int y, int width, int height);

inline constexpr int kNormalizedWidth = 1937;
inline constexpr int kNormalizedHeight = 2582;

/// Portrait 1937x2582 output. Landscape inputs are turned a quarter first;
/// the aspect ratio is matched by a center crop before resizing.
RasterImage normalize_resolution(const RasterImage& img);

struct QualityConfig {
  double min_blur = 50.0;
  double min_luma = 30.0;
  double max_luma = 225.0;
  double saturation_level = 250.0;
  double max_saturated_fraction = 0.05;
  double min_megapixels = 5.0;
};

struct QualityReport {
  double blur_score = 0.0;
  double mean_luma = 0.0;
  double megapixels = 0.0;
  double saturated_fraction = 0.0;
  bool accepted = true;
  /// Names of failed checks: "blur", "darkness", "brightness", "reflection",
  /// "resolution".
  std::vector<std::string> reasons;

  bool operator==(const QualityReport&) const = default;
};

QualityReport quality_gate(const RasterImage& img, const QualityConfig& config);

}  // namespace lfdr
