#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "lfdr/classifier.hpp"
#include "lfdr/segmenter.hpp"

namespace lfdr {

struct ThresholdConfig {
  double classification = 0.85;  // tau_c
  double area = 600.0;           // tau_a, pixels per band
  double uncertainty = 0.60;     // tau_u

  /// Throws InvalidConfig unless 0 <= tau_u < tau_c <= 1 and tau_a > 0.
  void validate() const;
  bool operator==(const ThresholdConfig&) const = default;
};

enum class Provenance { ClassifierFastPath, Fused };

std::string_view to_string(Provenance p);

struct Verdict {
  Outcome outcome = Outcome::Inconclusive;
  ClassLabel detail = ClassLabel::Inconclusive;
  double confidence = 0.0;
  Provenance provenance = Provenance::ClassifierFastPath;
  /// Band areas keyed by the class whose window was segmented: PositiveIGG,
  /// PositiveIGM and Negative (the control band). Present iff fused.
  std::optional<std::map<ClassLabel, std::size_t>> segmentation_areas;

  bool operator==(const Verdict&) const = default;
};

/// Truth table over band presence.
ClassLabel fuse_bands(bool control, bool igg, bool igm);

/// Fusion given already computed probabilities; the segmenter is called only
/// when max p < tau_c.
Verdict decide_with_probs(const ClassProbabilities& probs, const StripImage& strip, const StripSegmenter& segmenter,
                          const ThresholdConfig& thresholds);

Verdict decide(const StripImage& strip, const ModelParams& multiclass, const StripSegmenter& segmenter,
               const ThresholdConfig& thresholds);

/// True when the binary classifier and the multiclass argmax disagree on
/// positivity.
bool binary_disagrees(double p_positive, const ClassProbabilities& probs);

std::string verdict_to_json(const Verdict& v);

}  // namespace lfdr
