#include <algorithm>
#include <numeric>

#include "lfdr/error.hpp"
#include "lfdr/imaging.hpp"
#include "lfdr/strip_layout.hpp"

namespace lfdr {

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidDimensions, "mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  if (other.width_ != width_ || other.height_ != height_) {
    throw Error(ErrorCode::DimensionMismatch, "mask union requires equal dimensions");
  }
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

BandMask empty_band_mask() { return BandMask(kStripWidth, kStripHeight); }

}  // namespace lfdr
