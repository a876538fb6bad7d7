#include "lfdr/segmenter.hpp"

#include <algorithm>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

RowWindow clip(RowWindow w) { return {std::clamp(w.begin, 0, kStripHeight), std::clamp(w.end, 0, kStripHeight)}; }

RowWindow shifted(RowWindow w, int shift) { return clip({w.begin + shift, w.end + shift}); }

template <typename Visit>
void for_each_band_pixel(const DeficitMap& d, RowWindow w, double contrast, double peak_fraction, Visit visit) {
  w = clip(w);
  for (int x = 0; x < kStripWidth; ++x) {
    double peak = 0.0;
    for (int y = w.begin; y < w.end; ++y) peak = std::max(peak, d.at(x, y));
    const double floor = peak_fraction * peak;
    for (int y = w.begin; y < w.end; ++y) {
      const double v = d.at(x, y);
      if (v > contrast && v >= floor) visit(x, y);
    }
  }
}

struct Overlap {
  std::size_t predicted = 0;
  std::size_t hit = 0;
};

Overlap window_overlap(const DeficitMap& d, RowWindow w, double contrast, double peak_fraction, const BandMask& truth) {
  Overlap o;
  for_each_band_pixel(d, w, contrast, peak_fraction, [&](int x, int y) {
    ++o.predicted;
    if (truth.get(x, y)) ++o.hit;
  });
  return o;
}

double dice_from(std::size_t hit, std::size_t predicted, std::size_t truth) {
  const std::size_t denom = predicted + truth;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(hit) / static_cast<double>(denom);
}

}  // namespace

DeficitMap::DeficitMap(const StripImage& strip, int smoothing_radius) : values_(kStripWidth * kStripHeight) {
  const int r = std::max(0, smoothing_radius);
  std::vector<double> smooth(values_.size());
  std::vector<double> prefix(kStripWidth + 1);
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth; ++x) prefix[x + 1] = prefix[x] + strip.luma(x, y);
    for (int x = 0; x < kStripWidth; ++x) {
      const int lo = std::max(0, x - r), hi = std::min(kStripWidth, x + r + 1);
      smooth[static_cast<std::size_t>(y) * kStripWidth + x] = (prefix[hi] - prefix[lo]) / (hi - lo);
    }
  }
  std::vector<double> column(kStripHeight);
  for (int x = 0; x < kStripWidth; ++x) {
    for (int y = 0; y < kStripHeight; ++y) column[y] = smooth[static_cast<std::size_t>(y) * kStripWidth + x];
    auto mid = column.begin() + kStripHeight / 2;
    std::nth_element(column.begin(), mid, column.end());
    const double bg = std::max(1.0, *mid);
    for (int y = 0; y < kStripHeight; ++y) {
      const std::size_t i = static_cast<std::size_t>(y) * kStripWidth + x;
      values_[i] = (bg - smooth[i]) / bg;
    }
  }
}

std::vector<RowWindow> class_windows(ClassLabel label, const StripLayout& layout) {
  switch (label) {
    case ClassLabel::PositiveIGG: return {layout.igg};
    case ClassLabel::PositiveIGM: return {layout.igm};
    case ClassLabel::PositiveIGGandIGM: return {layout.igg, layout.igm};
    case ClassLabel::Negative: return {layout.control};
    case ClassLabel::Inconclusive: return {};
  }
  return {};
}

BandMask segment_bands(const DeficitMap& deficit, ClassLabel label, const SegConfig& config) {
  BandMask mask = empty_band_mask();
  for (const RowWindow& w : class_windows(label, config.windows)) {
    for_each_band_pixel(deficit, w, config.band_contrast, config.peak_fraction, [&](int x, int y) { mask.set(x, y); });
  }
  return mask;
}

BandMask segment_bands(const StripImage& strip, ClassLabel label, const SegConfig& config) {
  if (label == ClassLabel::Inconclusive) return empty_band_mask();
  return segment_bands(DeficitMap(strip, config.smoothing_radius), label, config);
}

BandMask BandSegmenter::segment(const StripImage& strip, ClassLabel label) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return segment_bands(strip, label, config_);
}

double mean_seg_dice(const std::vector<SegExample>& examples, const SegConfig& config) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    if (ex.label == ClassLabel::Inconclusive) continue;
    const DeficitMap d(ex.strip, config.smoothing_radius);
    std::size_t predicted = 0, hit = 0;
    for (const RowWindow& w : class_windows(ex.label, config.windows)) {
      const Overlap o = window_overlap(d, w, config.band_contrast, config.peak_fraction, ex.truth);
      predicted += o.predicted;
      hit += o.hit;
    }
    sum += dice_from(hit, predicted, ex.truth.count());
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "no segmentation examples with a band class");
  return sum / static_cast<double>(n);
}

SegConfig fit_seg_thresholds(const std::vector<SegExample>& examples, const SegConfig& base, const SegSearchGrid& grid) {
  struct Prepared {
    const SegExample* ex;
    DeficitMap deficit;
    std::size_t truth;
  };
  std::vector<Prepared> prepared;
  for (const auto& ex : examples) {
    if (ex.label == ClassLabel::Inconclusive) continue;
    prepared.push_back({&ex, DeficitMap(ex.strip, base.smoothing_radius), ex.truth.count()});
  }
  if (prepared.empty()) throw Error(ErrorCode::EmptyDataset, "no segmentation examples with a band class");
  if (grid.contrasts.empty() || grid.window_shifts.empty()) throw Error(ErrorCode::InvalidConfig, "empty search grid");

  const std::size_t ns = grid.window_shifts.size();
  const StripLayout& lay = base.windows;
  SegConfig best = base;
  double best_score = -1.0;

  for (double c : grid.contrasts) {
    // Sum of per-example Dice for each shift of the window(s) it depends on.
    std::vector<double> control(ns, 0.0), igg(ns, 0.0), igm(ns, 0.0), pair(ns * ns, 0.0);
    for (const auto& p : prepared) {
      const double f = base.peak_fraction;
      switch (p.ex->label) {
        case ClassLabel::Negative:
          for (std::size_t s = 0; s < ns; ++s) {
            const Overlap o = window_overlap(p.deficit, shifted(lay.control, grid.window_shifts[s]), c, f, p.ex->truth);
            control[s] += dice_from(o.hit, o.predicted, p.truth);
          }
          break;
        case ClassLabel::PositiveIGG:
          for (std::size_t s = 0; s < ns; ++s) {
            const Overlap o = window_overlap(p.deficit, shifted(lay.igg, grid.window_shifts[s]), c, f, p.ex->truth);
            igg[s] += dice_from(o.hit, o.predicted, p.truth);
          }
          break;
        case ClassLabel::PositiveIGM:
          for (std::size_t s = 0; s < ns; ++s) {
            const Overlap o = window_overlap(p.deficit, shifted(lay.igm, grid.window_shifts[s]), c, f, p.ex->truth);
            igm[s] += dice_from(o.hit, o.predicted, p.truth);
          }
          break;
        case ClassLabel::PositiveIGGandIGM: {
          std::vector<Overlap> g(ns), m(ns);
          for (std::size_t s = 0; s < ns; ++s) {
            g[s] = window_overlap(p.deficit, shifted(lay.igg, grid.window_shifts[s]), c, f, p.ex->truth);
            m[s] = window_overlap(p.deficit, shifted(lay.igm, grid.window_shifts[s]), c, f, p.ex->truth);
          }
          // The two windows never overlap, so union counts add.
          for (std::size_t a = 0; a < ns; ++a) {
            for (std::size_t b = 0; b < ns; ++b) {
              pair[a * ns + b] += dice_from(g[a].hit + m[b].hit, g[a].predicted + m[b].predicted, p.truth);
            }
          }
          break;
        }
        case ClassLabel::Inconclusive: break;
      }
    }
    for (std::size_t sc = 0; sc < ns; ++sc) {
      for (std::size_t sg = 0; sg < ns; ++sg) {
        for (std::size_t sm = 0; sm < ns; ++sm) {
          const double score = (control[sc] + igg[sg] + igm[sm] + pair[sg * ns + sm]) / static_cast<double>(prepared.size());
          if (score > best_score) {
            best_score = score;
            best.band_contrast = c;
            best.windows.control = shifted(lay.control, grid.window_shifts[sc]);
            best.windows.igg = shifted(lay.igg, grid.window_shifts[sg]);
            best.windows.igm = shifted(lay.igm, grid.window_shifts[sm]);
          }
        }
      }
    }
  }
  return best;
}

}  // namespace lfdr
