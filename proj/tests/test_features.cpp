#include <doctest.h>

#include <algorithm>
#include <random>

#include "lfdr/features.hpp"
#include "lfdr/synthgen.hpp"

using namespace lfdr;

namespace {

RasterImage gray_raster(std::uint8_t v) { return RasterImage(kStripWidth, kStripHeight, Rgb{v, v, v}); }
StripImage gray_strip(std::uint8_t v) { return StripImage::filled(Rgb{v, v, v}); }

void paint_rows(RasterImage& s, RowWindow w, Rgb c) {
  for (int y = w.begin; y < w.end; ++y) {
    for (int x = 0; x < kStripWidth; ++x) {
      for (int ch = 0; ch < 3; ++ch) s.at(x, y, ch) = c[ch];
    }
  }
}

}  // namespace

TEST_CASE("bins partition the strip rows") {
  CHECK(bin_begin(0) == 0);
  CHECK(bin_begin(kProfileBins) == kStripHeight);
  for (int b = 0; b < kProfileBins; ++b) {
    const int rows = bin_begin(b + 1) - bin_begin(b);
    CHECK(rows >= 13);
    CHECK(rows <= 14);
  }
  // Each nominal band window spans at least two bins.
  const StripLayout l;
  for (const RowWindow w : {l.control, l.igg, l.igm}) CHECK(w.size() >= 2 * (kStripHeight / kProfileBins + 1));
}

TEST_CASE("uniform strip: flat profile and zero summary") {
  for (std::uint8_t v : {1, 37, 240, 255}) {
    const FeatureVector f = extract_features(gray_strip(v));
    for (int i = 0; i < kProfileValues; ++i) CHECK(f[i] == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = kProfileValues; i < kFeatureCount; ++i) CHECK(f[i] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("a dark control band depresses exactly the bins it covers") {
  RasterImage s = gray_raster(240);
  const StripLayout layout;
  paint_rows(s, layout.control, Rgb{120, 60, 90});
  const FeatureVector f = extract_features(StripImage(s));

  const double median = 240.0;
  const double band_luma = kLumaR * 120 + kLumaG * 60 + kLumaB * 90;
  for (int b = 0; b < kProfileBins; ++b) {
    const int lo = bin_begin(b), hi = bin_begin(b + 1);
    int covered = 0;
    for (int y = lo; y < hi; ++y) covered += layout.control.contains(y);
    const double frac = static_cast<double>(covered) / (hi - lo);
    CAPTURE(b);
    CHECK(f[b] == doctest::Approx((frac * 120 + (1 - frac) * 240) / median).epsilon(1e-12));
    CHECK(f[kProfileBins + b] == doctest::Approx((frac * 60 + (1 - frac) * 240) / median).epsilon(1e-12));
    CHECK(f[2 * kProfileBins + b] == doctest::Approx((frac * 90 + (1 - frac) * 240) / median).epsilon(1e-12));
  }
  const double deficit = 1.0 - band_luma / median;
  CHECK(f[kProfileValues + 0] == doctest::Approx(deficit));
  CHECK(f[kProfileValues + 1] == doctest::Approx(0.0));
  CHECK(f[kProfileValues + 2] == doctest::Approx(0.0));
  CHECK(f[kProfileValues + 3] == doctest::Approx(deficit));
  CHECK(f[kProfileValues + 6] == doctest::Approx(0.0));

  // Population standard deviation of a two-level row profile.
  const double p = static_cast<double>(layout.control.size()) / kStripHeight;
  CHECK(f[kProfileValues + 7] == doctest::Approx(deficit * std::sqrt(p * (1 - p))).epsilon(1e-9));
}

TEST_CASE("half-covered window gives half the mean deficit") {
  RasterImage s = gray_raster(200);
  const StripLayout layout;
  paint_rows(s, {layout.igm.begin, layout.igm.begin + layout.igm.size() / 2}, Rgb{100, 100, 100});
  const FeatureVector f = extract_features(StripImage(s));
  CHECK(f[kProfileValues + 2] == doctest::Approx(0.5));
  CHECK(f[kProfileValues + 5] == doctest::Approx(0.25));
}

TEST_CASE("a stray band outside the windows shows up in the outside peak") {
  RasterImage s = gray_raster(200);
  paint_rows(s, {700, 720}, Rgb{150, 150, 150});
  const FeatureVector f = extract_features(StripImage(s));
  CHECK(f[kProfileValues + 6] == doctest::Approx(0.25));
  for (int i = 0; i < 6; ++i) CHECK(f[kProfileValues + i] == doctest::Approx(0.0));
}

TEST_CASE("median luma is the upper median") {
  RasterImage s = gray_raster(10);
  // Exactly half the pixels brighter: the upper median picks the bright level.
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth / 2; ++x) {
      for (int c = 0; c < 3; ++c) s.at(x, y, c) = 50;
    }
  }
  CHECK(median_luma(StripImage(s)) == doctest::Approx(50.0));
}

TEST_CASE("features are deterministic and rank band strength") {
  StripSpec spec;
  spec.label = ClassLabel::PositiveIGG;
  spec.control_intensity = 0.8;
  spec.igg_intensity = 0.4;
  spec.noise_sigma = 3.0;
  const StripSample a = generate_strip(spec, 11);
  CHECK(extract_features(a.strip) == extract_features(a.strip));
  CHECK(extract_features(a.strip) == extract_features(generate_strip(spec, 11).strip));

  const FeatureVector f = extract_features(a.strip);
  CHECK(f[kProfileValues + 1] > f[kProfileValues + 2]);
  CHECK(f[kProfileValues + 0] > f[kProfileValues + 1]);
}
