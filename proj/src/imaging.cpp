#include "lfdr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

void require_dimensions(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidDimensions,
                "image dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
}

}  // namespace

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  require_dimensions(width, height);
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  require_dimensions(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(ErrorCode::InvalidDimensions, "pixel buffer length does not match width*height*3");
  }
}

double RasterImage::luma(int x, int y) const noexcept {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return luma_of(pixels_[i], pixels_[i + 1], pixels_[i + 2]);
}

StripImage::StripImage(RasterImage raster) : raster_(std::move(raster)) {
  if (raster_.width() != kStripWidth || raster_.height() != kStripHeight) {
    throw Error(ErrorCode::InvalidDimensions,
                "strip must be 300x875, got " + std::to_string(raster_.width()) + "x" +
                    std::to_string(raster_.height()));
  }
}

StripImage StripImage::filled(Rgb fill) {
  return StripImage(RasterImage(kStripWidth, kStripHeight, fill));
}

std::vector<float> luma_plane(const RasterImage& img) {
  const auto px = img.pixels();
  std::vector<float> out(static_cast<std::size_t>(img.width()) * img.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(luma_of(px[3 * i], px[3 * i + 1], px[3 * i + 2]));
  }
  return out;
}

void sample_bilinear(const RasterImage& img, double fx, double fy, double out[3]) noexcept {
  const int w = img.width();
  const int h = img.height();
  fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  for (int c = 0; c < 3; ++c) {
    const double top = img.at(x0, y0, c) * (1.0 - ax) + img.at(x1, y0, c) * ax;
    const double bottom = img.at(x0, y1, c) * (1.0 - ax) + img.at(x1, y1, c) * ax;
    out[c] = top * (1.0 - ay) + bottom * ay;
  }
}

RasterImage resize(const RasterImage& img, int width, int height) {
  require_dimensions(width, height);
  if (width == img.width() && height == img.height()) return img;

  RasterImage out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  double v[3];
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      sample_bilinear(img, fx, fy, v);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(v[c]);
    }
  }
  return out;
}

RasterImage rotate(const RasterImage& img, double degrees, Rgb background) {
  if (!(std::abs(degrees) <= 45.0)) {
    throw Error(ErrorCode::AngleOutOfRange, "rotation must be within +-45 degrees");
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const int w = img.width();
  const int h = img.height();
  const int out_w = static_cast<int>(std::ceil(w * std::abs(cs) + h * std::abs(sn) - 1e-9));
  const int out_h = static_cast<int>(std::ceil(w * std::abs(sn) + h * std::abs(cs) - 1e-9));

  RasterImage out(out_w, out_h, background);
  double v[3];
  for (int y = 0; y < out_h; ++y) {
    const double dy = (y + 0.5) - out_h / 2.0;
    for (int x = 0; x < out_w; ++x) {
      const double dx = (x + 0.5) - out_w / 2.0;
      const double fx = w / 2.0 + (dx * cs - dy * sn) - 0.5;
      const double fy = h / 2.0 + (dx * sn + dy * cs) - 0.5;
      if (fx < -0.5 || fy < -0.5 || fx > w - 0.5 || fy > h - 0.5) continue;
      sample_bilinear(img, fx, fy, v);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(v[c]);
    }
  }
  return out;
}

RasterImage rotate90_ccw(const RasterImage& img) {
  const int w = img.width();
  const int h = img.height();
  RasterImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // (x, y) lands at column y, row (w - 1 - x).
      for (int c = 0; c < 3; ++c) out.at(y, w - 1 - x, c) = img.at(x, y, c);
    }
  }
  return out;
}

RasterImage crop(const RasterImage& img, int x, int y, int width, int height) {
  require_dimensions(width, height);
  if (x < 0 || y < 0 || x + width > img.width() || y + height > img.height()) {
    throw Error(ErrorCode::InvalidDimensions, "crop rectangle outside image");
  }
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height * 3);
  const auto src = img.pixels();
  for (int row = 0; row < height; ++row) {
    const std::size_t from = (static_cast<std::size_t>(y + row) * img.width() + x) * 3;
    std::copy_n(src.begin() + from, static_cast<std::size_t>(width) * 3,
                px.begin() + static_cast<std::size_t>(row) * width * 3);
  }
  return RasterImage(width, height, std::move(px));
}

RasterImage normalize_resolution(const RasterImage& input) {
  RasterImage img = input.width() > input.height() ? rotate90_ccw(input) : input;
  const long long w = img.width();
  const long long h = img.height();
  const long long lhs = w * kNormalizedHeight;
  const long long rhs = h * kNormalizedWidth;
  if (lhs > rhs) {
    const int new_w = std::max<int>(1, static_cast<int>(std::llround(
                                           static_cast<double>(h) * kNormalizedWidth / kNormalizedHeight)));
    img = crop(img, static_cast<int>((w - new_w) / 2), 0, new_w, static_cast<int>(h));
  } else if (lhs < rhs) {
    const int new_h = std::max<int>(1, static_cast<int>(std::llround(
                                           static_cast<double>(w) * kNormalizedHeight / kNormalizedWidth)));
    img = crop(img, 0, static_cast<int>((h - new_h) / 2), static_cast<int>(w), new_h);
  }
  return resize(img, kNormalizedWidth, kNormalizedHeight);
}

QualityReport quality_gate(const RasterImage& img, const QualityConfig& config) {
  QualityReport report;
  const int w = img.width();
  const int h = img.height();
  const std::vector<float> luma = luma_plane(img);

  double sum = 0.0;
  std::size_t saturated = 0;
  for (float l : luma) {
    sum += l;
    if (l >= config.saturation_level) ++saturated;
  }
  report.mean_luma = sum / static_cast<double>(luma.size());
  report.saturated_fraction = static_cast<double>(saturated) / static_cast<double>(luma.size());
  report.megapixels = static_cast<double>(w) * h / 1e6;

  if (w >= 3 && h >= 3) {
    // Differences against the center keep the response exactly zero on
    // constant input.
    const std::size_t n = static_cast<std::size_t>(w - 2) * (h - 2);
    double lap_sum = 0.0;
    double lap_sq = 0.0;
    for (int y = 1; y < h - 1; ++y) {
      const float* row = luma.data() + static_cast<std::size_t>(y) * w;
      const float* up = row - w;
      const float* down = row + w;
      for (int x = 1; x < w - 1; ++x) {
        const double c = row[x];
        const double r = (row[x - 1] - c) + (row[x + 1] - c) + (up[x] - c) + (down[x] - c);
        lap_sum += r;
        lap_sq += r * r;
      }
    }
    const double mean = lap_sum / static_cast<double>(n);
    report.blur_score = std::max(0.0, lap_sq / static_cast<double>(n) - mean * mean);
  }

  if (report.blur_score < config.min_blur) report.reasons.emplace_back("blur");
  if (report.mean_luma < config.min_luma) report.reasons.emplace_back("darkness");
  if (report.mean_luma > config.max_luma) report.reasons.emplace_back("brightness");
  if (report.saturated_fraction > config.max_saturated_fraction) report.reasons.emplace_back("reflection");
  if (report.megapixels < config.min_megapixels) report.reasons.emplace_back("resolution");
  report.accepted = report.reasons.empty();
  return report;
}

}  // namespace lfdr
