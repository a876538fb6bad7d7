#include <doctest.h>

#include <random>

#include "lfdr/error.hpp"
#include "lfdr/pipeline.hpp"
#include "lfdr/segmenter.hpp"
#include "lfdr/synthgen.hpp"
#include "oracles.hpp"

using namespace lfdr;

namespace {

// Crisp bands of relative contrast `contrast` on a flat background.
StripImage crisp_strip(const std::vector<RowWindow>& bands, double contrast) {
  RasterImage r(kStripWidth, kStripHeight, Rgb{240, 240, 240});
  const auto dark = static_cast<std::uint8_t>(240.0 * (1.0 - contrast) + 0.5);
  for (const RowWindow& w : bands) {
    for (int y = w.begin; y < w.end; ++y) {
      for (int x = 0; x < kStripWidth; ++x) {
        for (int c = 0; c < 3; ++c) r.at(x, y, c) = dark;
      }
    }
  }
  return StripImage(std::move(r));
}

BandMask rows_mask(const std::vector<RowWindow>& bands) {
  BandMask m = empty_band_mask();
  for (const RowWindow& w : bands) {
    for (int y = w.begin; y < w.end; ++y) {
      for (int x = 0; x < kStripWidth; ++x) m.set(x, y);
    }
  }
  return m;
}

std::vector<StripSample> sample_strips(std::size_t n, std::uint64_t seed) {
  std::vector<StripSample> out;
  for (const ManifestRow& row : plan_dataset(dataset_preset("balanced", seed))) {
    if (out.size() == n) break;
    out.push_back(generate_strip(row.strip_spec(), row.seed));
  }
  return out;
}

bool inside_any(int y, const std::vector<RowWindow>& ws) {
  for (const RowWindow& w : ws) {
    if (w.contains(y)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("a crisp band at contrast 0.1 is recovered exactly") {
  const StripLayout l;
  const std::vector<RowWindow> bands{{l.igg.begin + 12, l.igg.end - 14}};
  const StripImage strip = crisp_strip(bands, 0.1);
  SegConfig cfg;
  cfg.band_contrast = 0.05;
  for (int radius : {0, 8}) {
    cfg.smoothing_radius = radius;
    const BandMask m = segment_bands(strip, ClassLabel::PositiveIGG, cfg);
    CHECK(oracle::dice_by_counting(m, rows_mask(bands)) == 1.0);
  }
  // Below the contrast threshold nothing is found.
  cfg.band_contrast = 0.12;
  CHECK(segment_bands(strip, ClassLabel::PositiveIGG, cfg).count() == 0);
}

TEST_CASE("the union class is the union of the single-band masks") {
  for (const StripSample& s : sample_strips(12, 5)) {
    const SegConfig cfg;
    BandMask both = segment_bands(s.strip, ClassLabel::PositiveIGG, cfg);
    both |= segment_bands(s.strip, ClassLabel::PositiveIGM, cfg);
    CHECK(segment_bands(s.strip, ClassLabel::PositiveIGGandIGM, cfg) == both);
  }
}

TEST_CASE("masks stay inside the class windows and are deterministic") {
  const SegConfig cfg;
  for (const StripSample& s : sample_strips(10, 8)) {
    for (ClassLabel c : kAllClasses) {
      const BandMask m = segment_bands(s.strip, c, cfg);
      CHECK(m == segment_bands(s.strip, c, cfg));
      const auto windows = class_windows(c, cfg.windows);
      std::size_t outside = 0;
      for (int y = 0; y < kStripHeight; ++y) {
        for (int x = 0; x < kStripWidth; ++x) outside += m.get(x, y) && !inside_any(y, windows);
      }
      CHECK(outside == 0);
    }
  }
}

TEST_CASE("a blank strip and the Inconclusive class give empty masks") {
  const StripImage blank = StripImage::filled(Rgb{235, 235, 235});
  for (ClassLabel c : kAllClasses) CHECK(segment_bands(blank, c, SegConfig{}).count() == 0);
  const StripImage banded = crisp_strip({StripLayout{}.control}, 0.5);
  CHECK(segment_bands(banded, ClassLabel::Inconclusive, SegConfig{}).count() == 0);
  CHECK(segment_bands(banded, ClassLabel::Negative, SegConfig{}).count() > 0);
}

TEST_CASE("band segmenter counts its invocations") {
  const BandSegmenter seg;
  const StripImage blank = StripImage::filled(Rgb{200, 200, 200});
  CHECK(seg.invocations() == 0);
  seg.segment(blank, ClassLabel::Negative);
  seg.segment(blank, ClassLabel::Inconclusive);
  CHECK(seg.invocations() == 2);
  // The free function does not touch the counter.
  segment_bands(blank, ClassLabel::Negative, seg.config());
  CHECK(seg.invocations() == 2);
}

TEST_CASE("threshold search matches an exhaustive re-scan") {
  const auto examples = to_seg_examples(sample_strips(15, 12));
  SegSearchGrid grid;
  grid.contrasts = {0.01, 0.03, 0.08, 0.2};
  grid.window_shifts = {0, -10, 10};
  const SegConfig base;
  const SegConfig fitted = fit_seg_thresholds(examples, base, grid);

  // Score every grid point by segmenting and counting pixels.
  std::vector<DeficitMap> maps;
  for (const auto& ex : examples) maps.emplace_back(ex.strip, base.smoothing_radius);
  double best = -1.0;
  SegConfig argmax;
  for (double c : grid.contrasts) {
    for (int sc : grid.window_shifts) {
      for (int sg : grid.window_shifts) {
        for (int sm : grid.window_shifts) {
          SegConfig cfg = base;
          cfg.band_contrast = c;
          cfg.windows.control = {base.windows.control.begin + sc, base.windows.control.end + sc};
          cfg.windows.igg = {base.windows.igg.begin + sg, base.windows.igg.end + sg};
          cfg.windows.igm = {base.windows.igm.begin + sm, base.windows.igm.end + sm};
          double sum = 0.0;
          int n = 0;
          for (std::size_t i = 0; i < examples.size(); ++i) {
            if (examples[i].label == ClassLabel::Inconclusive) continue;
            sum += oracle::dice_by_counting(segment_bands(maps[i], examples[i].label, cfg), examples[i].truth);
            ++n;
          }
          const double score = sum / n;
          if (score > best) {
            best = score;
            argmax = cfg;
          }
        }
      }
    }
  }
  CHECK(fitted == argmax);
  CHECK(mean_seg_dice(examples, fitted) == doctest::Approx(best).epsilon(1e-12));
  CHECK(mean_seg_dice(examples, fitted) >= mean_seg_dice(examples, base) - 1e-12);
}

TEST_CASE("threshold search needs band examples") {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  std::vector<SegExample> only_inconclusive{
      {StripImage::filled(Rgb{200, 200, 200}), ClassLabel::Inconclusive, empty_band_mask()}};
  CHECK(code([&] { fit_seg_thresholds(only_inconclusive); }) == ErrorCode::EmptyDataset);
  CHECK(code([&] { fit_seg_thresholds({}); }) == ErrorCode::EmptyDataset);
  CHECK(code([&] { mean_seg_dice(only_inconclusive, SegConfig{}); }) == ErrorCode::EmptyDataset);
}
