#pragma once

#include <array>
#include <vector>

#include "lfdr/imaging.hpp"
#include "lfdr/strip_layout.hpp"

namespace lfdr {

inline constexpr int kProfileBins = 64;
inline constexpr int kProfileValues = 3 * kProfileBins;
inline constexpr int kSummaryValues = 8;
inline constexpr int kFeatureCount = kProfileValues + kSummaryValues;

/// Layout, in order:
///   [0, 192)   per-channel row profile, 64 bins per channel (R bins, then G,
///              then B), each divided by the strip's median luma
///   [192, 195) peak luma deficit in the control / IgG / IgM windows
///   [195, 198) mean luma deficit in the same windows
///   198        peak luma deficit outside all windows
///   199        standard deviation of the normalized luma row profile
using FeatureVector = std::array<double, kFeatureCount>;

/// First row of profile bin `b` (bins cover [bin_begin(b), bin_begin(b+1))).
constexpr int bin_begin(int b) noexcept { return b * kStripHeight / kProfileBins; }

FeatureVector extract_features(const StripImage& strip, const StripLayout& layout = {});

/// Upper median of all pixel lumas.
double median_luma(const StripImage& strip);

}  // namespace lfdr
