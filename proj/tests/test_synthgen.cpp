#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lfdr/error.hpp"
#include "lfdr/synthgen.hpp"

using namespace lfdr;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected lfdr::Error");
  return ErrorCode::Io;
}

StripSpec spec_of(ClassLabel label, double control, double igg, double igm, double noise = 0.0) {
  StripSpec s;
  s.label = label;
  s.control_intensity = control;
  s.igg_intensity = igg;
  s.igm_intensity = igm;
  s.noise_sigma = noise;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

fs::path fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("a noise-free negative strip has one band at the control rows") {
  const StripSample s = generate_strip(spec_of(ClassLabel::Negative, 1.0, 0.0, 0.0), 1);
  const StripLayout l;
  // Rows far from the control band stay exactly at the background level.
  for (int y = 0; y < kStripHeight; ++y) {
    if (std::abs(y + 0.5 - l.control.center()) < 4 * l.control.size() / 4.0) continue;
    for (int x = 0; x < kStripWidth; x += 37) {
      for (int c = 0; c < 3; ++c) REQUIRE(s.strip.at(x, y, c) == kStripBackground[c]);
    }
  }
  // The band center is darkened by the full band depth.
  const int mid = static_cast<int>(l.control.center());
  for (int c = 0; c < 3; ++c) CHECK(std::abs(s.strip.at(10, mid, c) - (kStripBackground[c] - kBandDepth[c])) <= 1);

  CHECK(s.masks.at(ClassLabel::PositiveIGG).count() == 0);
  CHECK(s.masks.at(ClassLabel::PositiveIGM).count() == 0);
  CHECK(s.masks.at(ClassLabel::Inconclusive).count() == 0);
  const RowWindow rows = half_peak_rows(l.control);
  CHECK(s.masks.at(ClassLabel::Negative).count() == static_cast<std::size_t>(rows.size() * kStripWidth));
}

TEST_CASE("mask rows sit where the band deficit exceeds half its peak") {
  const StripLayout l;
  const StripSample s = generate_strip(spec_of(ClassLabel::Negative, 1.0, 0.0, 0.0), 1);
  const RowWindow rows = half_peak_rows(l.control);
  // Gaussian with std = window/4 centered on the window.
  const double sigma = l.control.size() / 4.0;
  for (int y = l.control.begin - 20; y < l.control.end + 20; ++y) {
    const double d = y + 0.5 - l.control.center();
    const bool above_half = std::exp(-d * d / (2 * sigma * sigma)) > 0.5;
    CHECK(rows.contains(y) == above_half);
    CHECK(s.masks.at(ClassLabel::Negative).get(0, y) == above_half);
  }
}

TEST_CASE("the double-positive mask is the union of the single bands") {
  const StripSample s = generate_strip(spec_of(ClassLabel::PositiveIGGandIGM, 1.0, 1.0, 1.0), 2);
  BandMask u = s.masks.at(ClassLabel::PositiveIGG);
  u |= s.masks.at(ClassLabel::PositiveIGM);
  CHECK(s.masks.at(ClassLabel::PositiveIGGandIGM) == u);
  CHECK(s.masks.at(ClassLabel::PositiveIGG).count() > 0);
  CHECK(s.masks.at(ClassLabel::PositiveIGM).count() > 0);
}

TEST_CASE("generation is deterministic per seed") {
  const StripSpec spec = spec_of(ClassLabel::PositiveIGM, 0.7, 0.0, 0.4, 3.0);
  CHECK(generate_strip(spec, 5).strip == generate_strip(spec, 5).strip);
  CHECK_FALSE(generate_strip(spec, 5).strip == generate_strip(spec, 6).strip);

  CassetteSpec c;
  c.strip = spec;
  c.rotation_deg = -7.0;
  c.background = BackgroundPreset::ClutteredDesk;
  c.seed = 12;
  const CassetteSample a = generate_cassette(c);
  const CassetteSample b = generate_cassette(c);
  CHECK(a.image == b.image);
  CHECK(a.truth.quad == b.truth.quad);
  CHECK(a.image.width() == kNormalizedWidth);
  CHECK(a.image.height() == kNormalizedHeight);
}

TEST_CASE("spec validation") {
  CHECK_NOTHROW(validate_spec(spec_of(ClassLabel::PositiveIGG, 0.5, 0.05, 0.0)));
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::Negative, 1.0, 0.3, 0.0)); }) == ErrorCode::InconsistentSpec);
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::PositiveIGG, 1.0, 0.04, 0.0)); }) == ErrorCode::InconsistentSpec);
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::PositiveIGM, 1.0, 0.3, 0.3)); }) == ErrorCode::InconsistentSpec);
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::PositiveIGGandIGM, 1.0, 0.3, 0.0)); }) ==
        ErrorCode::InconsistentSpec);
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::Inconclusive, 0.5, 0.0, 0.0)); }) == ErrorCode::InconsistentSpec);
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::Negative, 1.5, 0.0, 0.0)); }) == ErrorCode::InconsistentSpec);
  CHECK(code_of([] { validate_spec(spec_of(ClassLabel::Negative, 1.0, 0.0, 0.0, -1.0)); }) == ErrorCode::InconsistentSpec);
  CHECK(code_of([] { generate_strip(spec_of(ClassLabel::Negative, 0.0, 0.0, 0.0), 1); }) == ErrorCode::InconsistentSpec);

  CassetteSpec c;
  c.rotation_deg = 18.5;
  CHECK(code_of([&] { generate_cassette(c); }) == ErrorCode::InconsistentSpec);
  c.rotation_deg = 0.0;
  c.lighting_gain = 0.4;
  CHECK(code_of([&] { generate_cassette(c); }) == ErrorCode::InconsistentSpec);
}

TEST_CASE("cassette quads: axis-aligned at 0, rigidly rotated at 18") {
  CassetteSpec c;
  c.strip = spec_of(ClassLabel::Negative, 0.8, 0.0, 0.0);
  c.seed = 40;
  const Quad q0 = generate_cassette(c).truth.quad;
  CHECK(q0[0].y == q0[1].y);
  CHECK(q0[2].y == q0[3].y);
  CHECK(q0[0].x == q0[3].x);
  CHECK(q0[1].x == q0[2].x);
  CHECK(q0[1].x - q0[0].x == doctest::Approx(kStripWidth));
  CHECK(q0[3].y - q0[0].y == doctest::Approx(kStripHeight));

  c.rotation_deg = 18.0;
  const Quad q18 = generate_cassette(c).truth.quad;
  // Both renders share the body center (same seed). Recover it and the
  // window's offset along the long axis from the two window centers.
  const double t = 18.0 * std::numbers::pi / 180.0;
  const Point2d w0{(q0[0].x + q0[2].x) / 2, (q0[0].y + q0[2].y) / 2};
  const Point2d w18{(q18[0].x + q18[2].x) / 2, (q18[0].y + q18[2].y) / 2};
  const double cx = w0.x;
  const double offset = (w18.x - cx) / std::sin(t);
  const double cy = w0.y - offset;
  for (int i = 0; i < 4; ++i) {
    const double lx = q0[i].x - cx, ly = q0[i].y - cy;
    const Point2d expect{lx * std::cos(t) + ly * std::sin(t) + cx, -lx * std::sin(t) + ly * std::cos(t) + cy};
    CAPTURE(i);
    CHECK(std::abs(q18[i].x - expect.x) <= 0.5);
    CHECK(std::abs(q18[i].y - expect.y) <= 0.5);
  }
}

TEST_CASE("mask area never shrinks as intensity grows") {
  for (double noise : {0.0, 3.0}) {
    std::size_t previous = 0;
    for (int k = 1; k <= 20; ++k) {
      const double v = k / 20.0;
      const StripSample s = generate_strip(spec_of(ClassLabel::PositiveIGG, 0.8, v, 0.0, noise), 3);
      const std::size_t area = s.masks.at(ClassLabel::PositiveIGG).count();
      CHECK(area >= previous);
      CHECK(area > 0);
      previous = area;
    }
  }
}

TEST_CASE("dataset plans: paper shape, exact counts, invalid splits") {
  const auto rows = plan_dataset(dataset_preset("paper-shape", 1));
  CHECK(rows.size() == 439);
  std::map<std::string, std::size_t> per_split;
  for (const auto& r : rows) {
    ++per_split[r.split];
    CHECK_NOTHROW(validate_spec(r.strip_spec()));
    CHECK(std::abs(r.rotation_deg) <= 18.0);
  }
  CHECK(per_split["train"] == 337);
  CHECK(per_split["val"] == 85);
  CHECK(per_split["test"] == 17);

  DatasetConfig counts = dataset_preset("balanced", 2);
  counts.class_counts = std::array<std::size_t, kNumClasses>{10, 10, 10, 10, 10};
  std::array<std::size_t, kNumClasses> seen{};
  for (const auto& r : plan_dataset(counts)) ++seen[code(r.label)];
  for (std::size_t n : seen) CHECK(n == 10);

  // Faint preset keeps test bands in [0.05, 0.2].
  for (const auto& r : plan_dataset(dataset_preset("faint", 3))) {
    for (double v : {r.igg_intensity, r.igm_intensity}) {
      if (v > 0 && r.label != ClassLabel::Inconclusive) {
        CHECK(v >= 0.05);
        CHECK(v <= 0.2);
      }
    }
  }

  DatasetConfig bad = dataset_preset("paper-shape", 1);
  bad.test = 0;
  CHECK(code_of([&] { plan_dataset(bad); }) == ErrorCode::InvalidSplit);
  CHECK(code_of([] { dataset_preset("nope", 1); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("generated datasets are reproducible and self-describing") {
  DatasetConfig cfg = dataset_preset("balanced", 9);
  cfg.class_counts = std::array<std::size_t, kNumClasses>{2, 2, 2, 2, 2};
  cfg.train = 6;
  cfg.val = 2;
  cfg.test = 2;
  const fs::path a = fresh_dir("lfdr_synth_a"), b = fresh_dir("lfdr_synth_b");
  const auto rows = generate_dataset(cfg, a.string());
  generate_dataset(cfg, b.string());
  const auto ta = tree(a), tb = tree(b);
  CHECK(ta.size() == 1 + 2 * rows.size());
  CHECK(ta == tb);

  const auto manifest = read_manifest((a / "manifest.csv").string());
  CHECK(manifest == rows);

  // Regenerating from the manifest columns reproduces every strip and mask.
  std::size_t checked = 0;
  for (const std::string split : {"train", "val", "test"}) {
    const auto loaded = load_split(a.string(), manifest, split);
    std::size_t i = 0;
    for (const auto& row : manifest) {
      if (row.split != split) continue;
      const StripSample again = generate_strip(row.strip_spec(), row.seed);
      CHECK(loaded[i].strip == again.strip);
      CHECK(loaded[i].label == row.label);
      for (ClassLabel c : kAllClasses) CHECK(loaded[i].masks.at(c) == again.masks.at(c));
      ++i;
      ++checked;
    }
  }
  CHECK(checked == rows.size());
  fs::remove_all(a);
  fs::remove_all(b);
  CHECK(code_of([] { read_manifest("/nonexistent/manifest.csv"); }) == ErrorCode::Io);
}

TEST_CASE("derived seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
  CHECK(derive_seed(42, 7) != derive_seed(43, 7));
}
