#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lfdr/classifier.hpp"
#include "lfdr/labels.hpp"
#include "lfdr/strip_layout.hpp"

namespace lfdr {

inline constexpr double kProbabilityEpsilon = 1e-12;

double dice_coefficient(const BinaryMask& x, const BinaryMask& y);
double dice_loss(const BinaryMask& x, const BinaryMask& y);

double binary_cross_entropy(const std::vector<double>& preds, const std::vector<int>& labels);
double categorical_cross_entropy(const std::vector<ClassProbabilities>& preds, const std::vector<ClassLabel>& labels);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  std::size_t samples = 0;
  double accuracy = 0.0;
  /// Macro means over the classes that occur in the labels or the predictions.
  double precision_mean = 0.0;
  double recall_mean = 0.0;
  double f1_mean = 0.0;
  std::optional<double> cross_entropy;
  std::array<ClassScores, kNumClasses> per_class{};
  /// confusion[true][predicted]
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  std::map<ClassLabel, double> dice_per_class;
};

MetricsReport classification_report(const std::vector<ClassLabel>& preds, const std::vector<ClassLabel>& labels,
                                    const std::vector<ClassProbabilities>* probs = nullptr);

std::string report_to_json(const MetricsReport& report);

/// Positive ground truth counts a true positive only for a Positive outcome;
/// Negative ground truth counts a true negative only for a Negative outcome.
/// Inconclusive ground truth is skipped.
std::pair<double, double> sensitivity_specificity(const std::vector<Outcome>& preds,
                                                  const std::vector<ClassLabel>& labels);

}  // namespace lfdr
