#include "lfdr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

double band_sigma(const RowWindow& w) { return w.size() / 4.0; }

double band_profile(const RowWindow& w, double row_center) {
  const double s = band_sigma(w);
  const double d = row_center - w.center();
  return std::exp(-d * d / (2.0 * s * s));
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5); }

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Cassette geometry in body-local pixels, origin at the body center, y down.
constexpr double kBodyHalfW = 280.0;
constexpr double kBodyHalfH = 780.0;
constexpr double kWindowCenterY = -180.0;
constexpr double kWellCenterY = 480.0;
constexpr double kWellRadius = 60.0;
constexpr double kTextureSigma = 2.5;
constexpr std::array<float, 3> kBodyColor{218, 218, 214};
constexpr std::array<float, 3> kWellColor{92, 86, 80};

struct FloatImage {
  int w, h;
  std::vector<float> v;  // interleaved RGB

  float* px(int x, int y) { return v.data() + (static_cast<std::size_t>(y) * w + x) * 3; }
};

/// Smooth noise in [-1, 1]: random values on a coarse lattice, bilinearly
/// interpolated.
class ValueNoise {
 public:
  ValueNoise(int width, int height, int cell, std::mt19937_64& rng) : cell_(cell) {
    gw_ = width / cell + 2;
    gh_ = height / cell + 2;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    grid_.resize(static_cast<std::size_t>(gw_) * gh_);
    for (auto& g : grid_) g = u(rng);
  }
  double at(double x, double y) const {
    const double gx = x / cell_, gy = y / cell_;
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double fx = gx - ix, fy = gy - iy;
    const auto g = [&](int a, int b) { return grid_[static_cast<std::size_t>(b) * gw_ + a]; };
    return (1 - fy) * ((1 - fx) * g(ix, iy) + fx * g(ix + 1, iy)) + fy * ((1 - fx) * g(ix, iy + 1) + fx * g(ix + 1, iy + 1));
  }

 private:
  int cell_, gw_ = 0, gh_ = 0;
  std::vector<double> grid_;
};

struct Blob {
  double cx, cy, rx, ry, angle;
  bool ellipse;
  std::array<float, 3> color;
  double ca = std::cos(angle), sa = std::sin(angle);

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    if (std::abs(dx) > rx + ry || std::abs(dy) > rx + ry) return false;
    const double u = (dx * ca + dy * sa) / rx, v = (-dx * sa + dy * ca) / ry;
    return ellipse ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
  }
};

std::array<float, 3> dim_color(std::mt19937_64& rng, double max_luma) {
  std::uniform_real_distribution<double> u(0.0, 255.0);
  for (;;) {
    const double r = u(rng), g = u(rng), b = u(rng);
    if (luma_of(to_byte(r), to_byte(g), to_byte(b)) < max_luma) {
      return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
    }
  }
}

void paint_background(FloatImage& img, BackgroundPreset preset, double body_cx, double body_cy, std::mt19937_64& rng) {
  const ValueNoise coarse(img.w, img.h, 160, rng);
  const ValueNoise fine(img.w, img.h, 24, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::array<float, 3> base{};
  std::vector<Blob> blobs;
  Blob palm{};
  switch (preset) {
    case BackgroundPreset::PlainTable:
      base = {static_cast<float>(125 + 25 * u(rng)), static_cast<float>(100 + 20 * u(rng)),
              static_cast<float>(75 + 20 * u(rng))};
      break;
    case BackgroundPreset::ClutteredDesk: {
      base = {70, 72, 78};
      const int n = 8 + static_cast<int>(u(rng) * 8);
      for (int i = 0; i < n; ++i) {
        blobs.push_back({u(rng) * img.w, u(rng) * img.h, 60 + 260 * u(rng), 40 + 200 * u(rng),
                         u(rng) * std::numbers::pi, u(rng) < 0.5, dim_color(rng, 150.0)});
      }
      break;
    }
    case BackgroundPreset::HandHeld:
      base = {52, 46, 42};
      palm = {body_cx + 80 * (u(rng) - 0.5), body_cy + 150 + 80 * u(rng), 820, 1250, 0.2 * (u(rng) - 0.5), true,
              {static_cast<float>(185 + 15 * u(rng)), static_cast<float>(140 + 12 * u(rng)),
               static_cast<float>(110 + 12 * u(rng))}};
      break;
  }

  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      std::array<float, 3> c = base;
      double shade = 1.0 + 0.12 * coarse.at(x, y) + 0.05 * fine.at(x, y);
      if (preset == BackgroundPreset::PlainTable) shade += 0.04 * std::sin(py * 0.05 + 3.0 * fine.at(x, y));
      for (const Blob& b : blobs) {
        if (b.contains(px, py)) c = b.color;
      }
      if (preset == BackgroundPreset::HandHeld && palm.contains(px, py)) {
        c = palm.color;
        shade = 1.0 + 0.05 * coarse.at(x, y);
      }
      float* p = img.px(x, y);
      for (int k = 0; k < 3; ++k) p[k] = static_cast<float>(c[k] * shade);
    }
  }
}

void box_blur(FloatImage& img, int r) {
  if (r <= 0) return;
  std::vector<float> tmp(img.v.size());
  std::vector<double> prefix(static_cast<std::size_t>(std::max(img.w, img.h)) + 1);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.h; ++y) {
      for (int x = 0; x < img.w; ++x) prefix[x + 1] = prefix[x] + img.px(x, y)[c];
      for (int x = 0; x < img.w; ++x) {
        const int lo = std::max(0, x - r), hi = std::min(img.w, x + r + 1);
        tmp[(static_cast<std::size_t>(y) * img.w + x) * 3 + c] = static_cast<float>((prefix[hi] - prefix[lo]) / (hi - lo));
      }
    }
    for (int x = 0; x < img.w; ++x) {
      for (int y = 0; y < img.h; ++y) prefix[y + 1] = prefix[y] + tmp[(static_cast<std::size_t>(y) * img.w + x) * 3 + c];
      for (int y = 0; y < img.h; ++y) {
        const int lo = std::max(0, y - r), hi = std::min(img.h, y + r + 1);
        img.px(x, y)[c] = static_cast<float>((prefix[hi] - prefix[lo]) / (hi - lo));
      }
    }
  }
}

}  // namespace

void validate_spec(const StripSpec& s) {
  const auto fail = [](const std::string& m) { throw Error(ErrorCode::InconsistentSpec, m); };
  if (!in_unit(s.control_intensity) || !in_unit(s.igg_intensity) || !in_unit(s.igm_intensity)) {
    fail("band intensities must lie in [0, 1]");
  }
  if (!(s.noise_sigma >= 0.0)) fail("noise_sigma must be non-negative");
  const double v = s.min_visible;
  const bool control_ok = s.control_intensity >= v;
  switch (s.label) {
    case ClassLabel::PositiveIGG:
      if (!control_ok || s.igg_intensity < v || s.igm_intensity != 0.0) fail("PositiveIGG needs control and IgG only");
      break;
    case ClassLabel::PositiveIGM:
      if (!control_ok || s.igm_intensity < v || s.igg_intensity != 0.0) fail("PositiveIGM needs control and IgM only");
      break;
    case ClassLabel::PositiveIGGandIGM:
      if (!control_ok || s.igg_intensity < v || s.igm_intensity < v) fail("PositiveIGGandIGM needs all three bands");
      break;
    case ClassLabel::Negative:
      if (!control_ok || s.igg_intensity != 0.0 || s.igm_intensity != 0.0) fail("Negative needs the control band only");
      break;
    case ClassLabel::Inconclusive:
      if (control_ok) fail("Inconclusive needs a missing control band");
      break;
  }
}

RowWindow half_peak_rows(const RowWindow& w) {
  const double half = band_sigma(w) * std::sqrt(2.0 * std::numbers::ln2);
  const double c = w.center();
  // Rows y with |y + 0.5 - c| < half.
  const int begin = static_cast<int>(std::floor(c - half - 0.5)) + 1;
  const int end = static_cast<int>(std::ceil(c + half - 0.5));
  return {std::clamp(begin, 0, kStripHeight), std::clamp(end, 0, kStripHeight)};
}

StripSample generate_strip(const StripSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  const std::array<std::pair<RowWindow, double>, 3> bands{{{spec.band_rows.control, spec.control_intensity},
                                                           {spec.band_rows.igg, spec.igg_intensity},
                                                           {spec.band_rows.igm, spec.igm_intensity}}};
  std::vector<std::array<double, 3>> row_value(kStripHeight);
  for (int y = 0; y < kStripHeight; ++y) {
    for (int c = 0; c < 3; ++c) {
      double v = kStripBackground[c];
      for (const auto& [w, intensity] : bands) {
        if (intensity > 0.0) v -= intensity * kBandDepth[c] * band_profile(w, y + 0.5);
      }
      row_value[y][c] = v;
    }
  }

  RasterImage raster(kStripWidth, kStripHeight);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double n = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
        raster.at(x, y, c) = to_byte(row_value[y][c] + n);
      }
    }
  }

  const auto band_mask = [&](const RowWindow& w, double intensity) {
    BandMask m = empty_band_mask();
    if (intensity <= 0.0) return m;
    const RowWindow rows = half_peak_rows(w);
    for (int y = rows.begin; y < rows.end; ++y) {
      for (int x = 0; x < kStripWidth; ++x) m.set(x, y);
    }
    return m;
  };
  StripSample out{StripImage(std::move(raster)), spec.label, {}};
  out.masks.emplace(ClassLabel::PositiveIGG, band_mask(spec.band_rows.igg, spec.igg_intensity));
  out.masks.emplace(ClassLabel::PositiveIGM, band_mask(spec.band_rows.igm, spec.igm_intensity));
  BandMask both = out.masks.at(ClassLabel::PositiveIGG);
  both |= out.masks.at(ClassLabel::PositiveIGM);
  out.masks.emplace(ClassLabel::PositiveIGGandIGM, std::move(both));
  out.masks.emplace(ClassLabel::Negative, band_mask(spec.band_rows.control, spec.control_intensity));
  out.masks.emplace(ClassLabel::Inconclusive, empty_band_mask());
  return out;
}

std::string_view to_string(BackgroundPreset b) {
  switch (b) {
    case BackgroundPreset::PlainTable: return "PlainTable";
    case BackgroundPreset::ClutteredDesk: return "ClutteredDesk";
    case BackgroundPreset::HandHeld: return "HandHeld";
  }
  return "PlainTable";
}

std::optional<BackgroundPreset> parse_background(std::string_view name) {
  for (auto b : {BackgroundPreset::PlainTable, BackgroundPreset::ClutteredDesk, BackgroundPreset::HandHeld}) {
    if (to_string(b) == name) return b;
  }
  return std::nullopt;
}

CassetteSample generate_cassette(const CassetteSpec& spec) {
  if (!(std::abs(spec.rotation_deg) <= 18.0)) throw Error(ErrorCode::InconsistentSpec, "rotation must lie in [-18, 18]");
  if (!(spec.lighting_gain >= 0.5 && spec.lighting_gain <= 1.5)) {
    throw Error(ErrorCode::InconsistentSpec, "lighting_gain must lie in [0.5, 1.5]");
  }
  if (spec.blur_radius < 0) throw Error(ErrorCode::InconsistentSpec, "blur_radius must be non-negative");

  std::mt19937_64 rng(spec.seed);
  StripSample strip = generate_strip(spec.strip, derive_seed(spec.seed, 1));

  std::uniform_real_distribution<double> offset(-80.0, 80.0);
  const double cx = kNormalizedWidth / 2.0 + offset(rng);
  const double cy = kNormalizedHeight / 2.0 + offset(rng);
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const auto to_image = [&](double lx, double ly) { return Point2d{lx * ct + ly * st + cx, -lx * st + ly * ct + cy}; };

  FloatImage img{kNormalizedWidth, kNormalizedHeight, std::vector<float>(static_cast<std::size_t>(kNormalizedWidth) * kNormalizedHeight * 3)};
  paint_background(img, spec.background, cx, cy, rng);

  const double win_half_w = kStripWidth / 2.0, win_half_h = kStripHeight / 2.0;
  const RasterImage& sr = strip.strip.raster();
  double sampled[3];
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double lx = dx * ct - dy * st, ly = dx * st + dy * ct;
      if (std::abs(lx) >= kBodyHalfW || std::abs(ly) >= kBodyHalfH) continue;
      float* p = img.px(x, y);
      const double wy = ly - kWindowCenterY;
      if (std::abs(lx) < win_half_w && std::abs(wy) < win_half_h) {
        sample_bilinear(sr, lx + win_half_w - 0.5, wy + win_half_h - 0.5, sampled);
        for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(sampled[c]);
      } else if (std::hypot(lx, ly - kWellCenterY) < kWellRadius) {
        for (int c = 0; c < 3; ++c) p[c] = kWellColor[c];
      } else {
        for (int c = 0; c < 3; ++c) p[c] = kBodyColor[c];
      }
    }
  }

  if (spec.background == BackgroundPreset::HandHeld) {
    // Fingers wrapping the cassette's long edge, clear of the window.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double side = u(rng) < 0.5 ? -1.0 : 1.0;
    const std::array<float, 3> skin{static_cast<float>(180 + 15 * u(rng)), static_cast<float>(135 + 12 * u(rng)),
                                    static_cast<float>(105 + 12 * u(rng))};
    for (int f = 0; f < 3; ++f) {
      const double ly = 250.0 + 110.0 * f + 30.0 * u(rng);
      const Point2d c = to_image(side * (kBodyHalfW + 20.0), ly);
      const Blob finger{c.x, c.y, 120.0, 45.0, -theta, true, skin};
      const int x0 = std::max(0, static_cast<int>(c.x - 130)), x1 = std::min(img.w, static_cast<int>(c.x + 130));
      const int y0 = std::max(0, static_cast<int>(c.y - 130)), y1 = std::min(img.h, static_cast<int>(c.y + 130));
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (finger.contains(x + 0.5, y + 0.5)) std::copy(skin.begin(), skin.end(), img.px(x, y));
        }
      }
    }
  }

  // Surface texture noise (gray), then optics, then exposure.
  std::normal_distribution<float> texture(0.0f, static_cast<float>(kTextureSigma));
  for (std::size_t i = 0; i < img.v.size(); i += 3) {
    const float n = texture(rng);
    for (int c = 0; c < 3; ++c) img.v[i + c] += n;
  }
  box_blur(img, spec.blur_radius);

  RasterImage out(kNormalizedWidth, kNormalizedHeight);
  auto px = out.pixels();
  for (std::size_t i = 0; i < img.v.size(); ++i) px[i] = to_byte(img.v[i] * spec.lighting_gain);

  CassetteDetection truth;
  truth.quad = {to_image(-win_half_w, kWindowCenterY - win_half_h), to_image(win_half_w, kWindowCenterY - win_half_h),
                to_image(win_half_w, kWindowCenterY + win_half_h), to_image(-win_half_w, kWindowCenterY + win_half_h)};
  truth.rotation_deg = spec.rotation_deg;
  truth.confidence = 1.0;
  return {std::move(out), truth, std::move(strip)};
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace lfdr
