#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfdr {

enum class ErrorCode {
  MalformedImage,
  UnsupportedFormat,
  InvalidDimensions,
  AngleOutOfRange,
  NoCassetteFound,
  AmbiguousDetection,
  QuadOutOfBounds,
  DegeneratePolygon,
  InvalidAnnotation,
  EmptyDataset,
  SingleClassDataset,
  ShapeMismatch,
  DimensionMismatch,
  LengthMismatch,
  EmptyInput,
  EmptyDenominator,
  DuplicateStrip,
  UnknownItem,
  AlreadyLabeled,
  InconsistentSpec,
  InvalidSplit,
  InvalidConfig,
  SchemaVersion,
  Io,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI and HTTP layers can map it to an exit status or response code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lfdr
