#include "lfdr/features.hpp"

#include <algorithm>
#include <cmath>

namespace lfdr {

double median_luma(const StripImage& strip) {
  std::vector<double> luma;
  luma.reserve(static_cast<std::size_t>(kStripWidth) * kStripHeight);
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth; ++x) luma.push_back(strip.luma(x, y));
  }
  const auto mid = luma.begin() + static_cast<std::ptrdiff_t>(luma.size() / 2);
  std::nth_element(luma.begin(), mid, luma.end());
  return *mid;
}

FeatureVector extract_features(const StripImage& strip, const StripLayout& layout) {
  FeatureVector f{};
  const double median = std::max(1.0, median_luma(strip));

  std::array<std::vector<double>, 3> channel_rows;
  std::vector<double> luma_rows(kStripHeight);
  for (auto& r : channel_rows) r.assign(kStripHeight, 0.0);
  for (int y = 0; y < kStripHeight; ++y) {
    double s[3] = {0, 0, 0};
    for (int x = 0; x < kStripWidth; ++x) {
      for (int c = 0; c < 3; ++c) s[c] += strip.at(x, y, c);
    }
    for (int c = 0; c < 3; ++c) channel_rows[c][y] = s[c] / kStripWidth;
    luma_rows[y] = (kLumaR * s[0] + kLumaG * s[1] + kLumaB * s[2]) / kStripWidth / median;
  }

  for (int c = 0; c < 3; ++c) {
    for (int b = 0; b < kProfileBins; ++b) {
      double s = 0.0;
      const int lo = bin_begin(b), hi = bin_begin(b + 1);
      for (int y = lo; y < hi; ++y) s += channel_rows[c][y];
      f[c * kProfileBins + b] = s / (hi - lo) / median;
    }
  }

  const std::array<RowWindow, 3> windows{layout.control, layout.igg, layout.igm};
  for (int i = 0; i < 3; ++i) {
    double peak = 0.0, mean = 0.0;
    const RowWindow w = windows[i];
    for (int y = w.begin; y < w.end; ++y) {
      const double d = std::max(0.0, 1.0 - luma_rows[y]);
      peak = std::max(peak, d);
      mean += d;
    }
    f[kProfileValues + i] = peak;
    f[kProfileValues + 3 + i] = mean / w.size();
  }

  double outside = 0.0, sum = 0.0, sq = 0.0;
  for (int y = 0; y < kStripHeight; ++y) {
    const bool in_window = std::any_of(windows.begin(), windows.end(), [y](const RowWindow& w) { return w.contains(y); });
    if (!in_window) outside = std::max(outside, 1.0 - luma_rows[y]);
    sum += luma_rows[y];
  }
  const double mean = sum / kStripHeight;
  for (double v : luma_rows) sq += (v - mean) * (v - mean);
  f[kProfileValues + 6] = std::max(0.0, outside);
  f[kProfileValues + 7] = std::sqrt(sq / kStripHeight);
  return f;
}

}  // namespace lfdr
