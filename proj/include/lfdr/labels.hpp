#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace lfdr {

/// The five strip classes. Integer codes are stable and used as indices into
/// probability vectors and weight rows.
enum class ClassLabel : int {
  PositiveIGG = 0,
  PositiveIGM = 1,
  PositiveIGGandIGM = 2,
  Negative = 3,
  Inconclusive = 4,
};

inline constexpr int kNumClasses = 5;

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses{
    ClassLabel::PositiveIGG, ClassLabel::PositiveIGM, ClassLabel::PositiveIGGandIGM,
    ClassLabel::Negative, ClassLabel::Inconclusive};

enum class BinaryLabel : int { Positive = 1, Unknown = 0 };

enum class Outcome { Positive, Negative, Inconclusive };

constexpr int code(ClassLabel c) noexcept { return static_cast<int>(c); }
ClassLabel class_from_code(int code);

constexpr bool is_positive(ClassLabel c) noexcept {
  return c == ClassLabel::PositiveIGG || c == ClassLabel::PositiveIGM || c == ClassLabel::PositiveIGGandIGM;
}

constexpr BinaryLabel to_binary(ClassLabel c) noexcept {
  return is_positive(c) ? BinaryLabel::Positive : BinaryLabel::Unknown;
}

constexpr Outcome map_outcome(ClassLabel c) noexcept {
  if (is_positive(c)) return Outcome::Positive;
  return c == ClassLabel::Negative ? Outcome::Negative : Outcome::Inconclusive;
}

std::string_view to_string(ClassLabel c);
std::string_view to_string(BinaryLabel b);
std::string_view to_string(Outcome o);
std::optional<ClassLabel> parse_class_label(std::string_view name);

}  // namespace lfdr
