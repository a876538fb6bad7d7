#include "lfdr/labels.hpp"

#include "lfdr/error.hpp"

namespace lfdr {

ClassLabel class_from_code(int c) {
  if (c < 0 || c >= kNumClasses) throw Error(ErrorCode::ShapeMismatch, "class code out of range: " + std::to_string(c));
  return static_cast<ClassLabel>(c);
}

std::string_view to_string(ClassLabel c) {
  switch (c) {
    case ClassLabel::PositiveIGG: return "PositiveIGG";
    case ClassLabel::PositiveIGM: return "PositiveIGM";
    case ClassLabel::PositiveIGGandIGM: return "PositiveIGGandIGM";
    case ClassLabel::Negative: return "Negative";
    case ClassLabel::Inconclusive: return "Inconclusive";
  }
  return "?";
}

std::string_view to_string(BinaryLabel b) { return b == BinaryLabel::Positive ? "Positive" : "Unknown"; }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Positive: return "Positive";
    case Outcome::Negative: return "Negative";
    case Outcome::Inconclusive: return "Inconclusive";
  }
  return "?";
}

std::optional<ClassLabel> parse_class_label(std::string_view name) {
  for (ClassLabel c : kAllClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedImage: return "MalformedImage";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorCode::NoCassetteFound: return "NoCassetteFound";
    case ErrorCode::AmbiguousDetection: return "AmbiguousDetection";
    case ErrorCode::QuadOutOfBounds: return "QuadOutOfBounds";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::InvalidAnnotation: return "InvalidAnnotation";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyDenominator: return "EmptyDenominator";
    case ErrorCode::DuplicateStrip: return "DuplicateStrip";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::AlreadyLabeled: return "AlreadyLabeled";
    case ErrorCode::InconsistentSpec: return "InconsistentSpec";
    case ErrorCode::InvalidSplit: return "InvalidSplit";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SchemaVersion: return "SchemaVersion";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace lfdr
