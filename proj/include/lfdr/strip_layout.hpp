#pragma once

#include <cstdint>
#include <vector>

namespace lfdr {

/// Half-open row range [begin, end) on a 300x875 strip.
struct RowWindow {
  int begin = 0;
  int end = 0;

  int size() const noexcept { return end - begin; }
  double center() const noexcept { return 0.5 * (begin + end); }
  bool contains(int row) const noexcept { return row >= begin && row < end; }
  bool operator==(const RowWindow&) const = default;
};

/// Nominal band positions, control band nearest the top edge.
struct StripLayout {
  RowWindow control{150, 210};
  RowWindow igg{360, 420};
  RowWindow igm{540, 600};

  bool operator==(const StripLayout&) const = default;
};

/// Binary pixel mask, row-major, one byte (0 or 1) per pixel.
class BinaryMask {
 public:
  BinaryMask(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool get(int x, int y) const noexcept { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) noexcept { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;

  BinaryMask& operator|=(const BinaryMask& other);
  bool operator==(const BinaryMask&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Segmentation masks are always strip-sized.
using BandMask = BinaryMask;

BandMask empty_band_mask();

}  // namespace lfdr
