#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "lfdr/imaging.hpp"
#include "lfdr/labels.hpp"
#include "lfdr/strip_layout.hpp"

namespace lfdr {

struct SegConfig {
  /// Minimum relative luma deficit (background - luma) / background.
  double band_contrast = 0.02;
  /// A pixel must also reach this fraction of its column's peak deficit
  /// inside the window; 0 disables the check.
  double peak_fraction = 0.5;
  /// Half-width of the horizontal box filter applied before thresholding.
  int smoothing_radius = 8;
  StripLayout windows;

  bool operator==(const SegConfig&) const = default;
};

/// Relative luma deficit per pixel against a per-column median background.
class DeficitMap {
 public:
  DeficitMap(const StripImage& strip, int smoothing_radius);

  double at(int x, int y) const noexcept { return values_[static_cast<std::size_t>(y) * kStripWidth + x]; }

 private:
  std::vector<double> values_;
};

/// Row windows a class's mask may occupy: one for single bands, two for the
/// IgG+IgM union, none for Inconclusive.
std::vector<RowWindow> class_windows(ClassLabel label, const StripLayout& layout);

BandMask segment_bands(const StripImage& strip, ClassLabel label, const SegConfig& config);
BandMask segment_bands(const DeficitMap& deficit, ClassLabel label, const SegConfig& config);

class StripSegmenter {
 public:
  virtual ~StripSegmenter() = default;
  virtual BandMask segment(const StripImage& strip, ClassLabel label) const = 0;
  /// Number of segment() calls so far.
  virtual std::uint64_t invocations() const noexcept = 0;
};

class BandSegmenter final : public StripSegmenter {
 public:
  explicit BandSegmenter(SegConfig config = {}) : config_(config) {}

  BandMask segment(const StripImage& strip, ClassLabel label) const override;
  std::uint64_t invocations() const noexcept override { return calls_.load(); }
  const SegConfig& config() const noexcept { return config_; }

 private:
  SegConfig config_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

struct SegExample {
  StripImage strip;
  ClassLabel label;
  /// Ground truth for `label` (the union for PositiveIGGandIGM, the control
  /// band for Negative).
  BandMask truth;
};

struct SegSearchGrid {
  std::vector<double> contrasts{0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2};
  std::vector<int> window_shifts{0, -10, 10, -20, 20};
};

/// Mean Dice of segment_bands against the truth over examples whose label is
/// not Inconclusive.
double mean_seg_dice(const std::vector<SegExample>& examples, const SegConfig& config);

/// Exhaustive search over contrast and per-window row shifts for the highest
/// mean Dice. Ties go to the earliest grid point (contrast first, then the
/// control, IgG and IgM shifts in grid order). Other fields of `base` are kept.
SegConfig fit_seg_thresholds(const std::vector<SegExample>& examples, const SegConfig& base = {},
                             const SegSearchGrid& grid = {});

}  // namespace lfdr
