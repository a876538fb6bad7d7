#include <doctest.h>

#include <cmath>

#include "lfdr/error.hpp"
#include "lfdr/strip_extractor.hpp"
#include "lfdr/synthgen.hpp"
#include "oracles.hpp"

using namespace lfdr;

namespace {

CassetteSpec cassette(double rotation, BackgroundPreset bg, std::uint64_t seed) {
  CassetteSpec s;
  s.strip.label = ClassLabel::PositiveIGGandIGM;
  s.strip.control_intensity = 0.9;
  s.strip.igg_intensity = 0.6;
  s.strip.igm_intensity = 0.3;
  s.strip.noise_sigma = 2.0;
  s.rotation_deg = rotation;
  s.background = bg;
  s.seed = seed;
  return s;
}

double mean_abs_error(const StripImage& a, const StripImage& b) {
  double sum = 0.0;
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth; ++x) {
      for (int c = 0; c < 3; ++c) sum += std::abs(a.at(x, y, c) - b.at(x, y, c));
    }
  }
  return sum / (3.0 * kStripWidth * kStripHeight);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected lfdr::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("otsu splits a bimodal histogram between the modes") {
  std::array<std::uint64_t, 256> h{};
  h[40] = 1000;
  h[200] = 500;
  const int t = otsu_threshold(h);
  CHECK(t >= 40);
  CHECK(t < 200);
}

TEST_CASE("detection at rotation 0 and at the envelope edges") {
  for (double rot : {0.0, 18.0, -18.0}) {
    CAPTURE(rot);
    const CassetteSample s = generate_cassette(cassette(rot, BackgroundPreset::PlainTable, 3));
    const CassetteDetection d = detect_cassette(s.image);
    CHECK(oracle::quad_iou(d.quad, s.truth.quad) >= 0.9);
    CHECK(std::abs(d.rotation_deg - rot) <= 2.0);
    CHECK(d.confidence > 0.0);
    CHECK(d.confidence <= 1.0);
    CHECK(oracle::polygon_area({d.quad.begin(), d.quad.end()}) > 0.0);
  }
}

TEST_CASE("detection on cluttered and hand-held backgrounds") {
  for (auto bg : {BackgroundPreset::ClutteredDesk, BackgroundPreset::HandHeld}) {
    for (double rot : {-11.0, 7.0}) {
      CAPTURE(rot);
      const CassetteSample s = generate_cassette(cassette(rot, bg, 17));
      const CassetteDetection d = detect_cassette(s.image);
      CHECK(oracle::quad_iou(d.quad, s.truth.quad) >= 0.9);
    }
  }
}

TEST_CASE("lighting: moderate gain is detected, clipped frames fail the quality gate") {
  for (double gain : {0.85, 1.1}) {
    CAPTURE(gain);
    CassetteSpec spec = cassette(-4.0, BackgroundPreset::HandHeld, 23);
    spec.lighting_gain = gain;
    const CassetteSample s = generate_cassette(spec);
    CHECK(quality_gate(s.image, QualityConfig{}).accepted);
    CHECK(oracle::quad_iou(detect_cassette(s.image).quad, s.truth.quad) >= 0.9);
  }
  // At 1.2 the window (240) and the body both clip to 255 and the window
  // outline is gone; the saturation check catches it first.
  CassetteSpec spec = cassette(-4.0, BackgroundPreset::HandHeld, 23);
  spec.lighting_gain = 1.2;
  const QualityReport q = quality_gate(generate_cassette(spec).image, QualityConfig{});
  CHECK_FALSE(q.accepted);
  CHECK(q.saturated_fraction > QualityConfig{}.max_saturated_fraction);
}

TEST_CASE("detection is deterministic") {
  const CassetteSample s = generate_cassette(cassette(5.0, BackgroundPreset::ClutteredDesk, 8));
  const auto a = detect_cassette(s.image);
  const auto b = detect_cassette(s.image);
  CHECK(a.quad == b.quad);
  CHECK(a.confidence == b.confidence);
}

TEST_CASE("no cassette and two cassettes") {
  CHECK(code_of([] { detect_cassette(RasterImage(kNormalizedWidth, kNormalizedHeight, Rgb{90, 80, 70})); }) ==
        ErrorCode::NoCassetteFound);

  // The same cassette pasted twice side by side on a plain canvas.
  const CassetteSample s = generate_cassette(cassette(0.0, BackgroundPreset::PlainTable, 5));
  const double wx = (s.truth.quad[0].x + s.truth.quad[2].x) / 2.0;
  const double wy = (s.truth.quad[0].y + s.truth.quad[2].y) / 2.0;
  const int x0 = static_cast<int>(wx) - 300, y0 = static_cast<int>(wy) - 650;
  RasterImage twin(kNormalizedWidth, kNormalizedHeight, Rgb{100, 80, 60});
  for (int dx : {-20 - x0, 1000 - x0}) {
    for (int y = y0; y < y0 + 1640; ++y) {
      for (int x = x0; x < x0 + 600; ++x) {
        for (int c = 0; c < 3; ++c) twin.at(x + dx, y, c) = s.image.at(x, y, c);
      }
    }
  }
  CHECK(code_of([&] { detect_cassette(twin); }) == ErrorCode::AmbiguousDetection);
}

TEST_CASE("extract: identity warp copies the region") {
  RasterImage img(500, 1000, Rgb{0, 0, 0});
  for (int y = 0; y < 1000; ++y) {
    for (int x = 0; x < 500; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>(200 + (x % 7));
      img.at(x, y, 1) = static_cast<std::uint8_t>(210 + (y % 11));
      img.at(x, y, 2) = 220;
    }
  }
  const CassetteDetection det{{{{40, 60}, {340, 60}, {340, 935}, {40, 935}}}, 0.0, 1.0};
  const StripImage s = extract_strip(img, det);
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth; ++x) {
      for (int c = 0; c < 3; ++c) REQUIRE(s.at(x, y, c) == img.at(x + 40, y + 60, c));
    }
  }
}

TEST_CASE("extract: quad past the edge") {
  const RasterImage img(400, 400, Rgb{200, 200, 200});
  const CassetteDetection det{{{{-5, 0}, {300, 0}, {300, 390}, {-5, 390}}}, 0.0, 1.0};
  CHECK(code_of([&] { extract_strip(img, det); }) == ErrorCode::QuadOutOfBounds);
  const CassetteDetection tall{{{{0, 0}, {300, 0}, {300, 401}, {0, 401}}}, 0.0, 1.0};
  CHECK(code_of([&] { extract_strip(img, tall); }) == ErrorCode::QuadOutOfBounds);
}

TEST_CASE("extract: round trip against the pre-compositing strip") {
  for (double rot : {0.0, 12.5, -18.0}) {
    CAPTURE(rot);
    const CassetteSample s = generate_cassette(cassette(rot, BackgroundPreset::PlainTable, 21));
    CHECK(mean_abs_error(extract_strip(s.image, s.truth), s.strip.strip) <= 5.0);
    CHECK(mean_abs_error(extract_strip(s.image, detect_cassette(s.image)), s.strip.strip) <= 5.0);
  }
}

TEST_CASE("extract: an upside-down quad is turned control-band up") {
  CassetteSpec spec = cassette(0.0, BackgroundPreset::PlainTable, 2);
  spec.strip.label = ClassLabel::Negative;
  spec.strip.igg_intensity = spec.strip.igm_intensity = 0.0;
  const CassetteSample s = generate_cassette(spec);
  const CassetteDetection& t = s.truth;
  const CassetteDetection flipped{{t.quad[2], t.quad[3], t.quad[0], t.quad[1]}, 180.0, 1.0};
  const StripImage upright = extract_strip(s.image, t);
  const StripImage turned = extract_strip(s.image, flipped);
  CHECK(mean_abs_error(upright, s.strip.strip) <= 5.0);
  CHECK(mean_abs_error(turned, upright) <= 5.0);
}

TEST_CASE("any detector implementation slots into extraction") {
  struct FixedDetector final : CassetteDetector {
    CassetteDetection det;
    CassetteDetection detect(const RasterImage&) const override { return det; }
  };
  const CassetteSample s = generate_cassette(cassette(0.0, BackgroundPreset::PlainTable, 4));
  FixedDetector fixed;
  fixed.det = s.truth;
  const CassetteDetector& any = fixed;
  const StripImage strip = extract_strip(s.image, any.detect(s.image));
  CHECK(strip.width() == kStripWidth);
  CHECK(strip.height() == kStripHeight);
  CHECK(mean_abs_error(strip, s.strip.strip) <= 5.0);
}
