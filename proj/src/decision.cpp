#include "lfdr/decision.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

void ThresholdConfig::validate() const {
  if (!(classification >= 0.0 && classification <= 1.0) || !(uncertainty >= 0.0 && uncertainty <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "thresholds must lie in [0, 1]");
  }
  if (!(classification > uncertainty)) {
    throw Error(ErrorCode::InvalidConfig, "classification threshold must exceed the uncertainty threshold");
  }
  if (!(area > 0.0)) throw Error(ErrorCode::InvalidConfig, "area threshold must be positive");
}

std::string_view to_string(Provenance p) {
  return p == Provenance::ClassifierFastPath ? "ClassifierFastPath" : "Fused";
}

ClassLabel fuse_bands(bool control, bool igg, bool igm) {
  if (!control) return ClassLabel::Inconclusive;
  if (igg && igm) return ClassLabel::PositiveIGGandIGM;
  if (igg) return ClassLabel::PositiveIGG;
  if (igm) return ClassLabel::PositiveIGM;
  return ClassLabel::Negative;
}

Verdict decide_with_probs(const ClassProbabilities& probs, const StripImage& strip, const StripSegmenter& segmenter,
                          const ThresholdConfig& thresholds) {
  Verdict v;
  const ClassLabel top = probs.argmax();
  const double pmax = probs.max();
  if (pmax >= thresholds.classification) {
    v.detail = top;
    v.outcome = map_outcome(top);
    v.confidence = pmax;
    v.provenance = Provenance::ClassifierFastPath;
    return v;
  }

  std::map<ClassLabel, std::size_t> areas;
  for (ClassLabel band : {ClassLabel::PositiveIGG, ClassLabel::PositiveIGM, ClassLabel::Negative}) {
    areas[band] = segmenter.segment(strip, band).count();
  }
  const auto present = [&](ClassLabel band) { return static_cast<double>(areas[band]) >= thresholds.area; };
  v.detail = fuse_bands(present(ClassLabel::Negative), present(ClassLabel::PositiveIGG), present(ClassLabel::PositiveIGM));
  v.outcome = map_outcome(v.detail);
  v.provenance = Provenance::Fused;
  if (v.detail == top) {
    v.confidence = pmax;
  } else {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& [band, a] : areas) margin = std::min(margin, std::abs(static_cast<double>(a) - thresholds.area));
    v.confidence = 0.5 + 0.5 * std::min(1.0, margin / thresholds.area);
  }
  v.segmentation_areas = std::move(areas);
  return v;
}

Verdict decide(const StripImage& strip, const ModelParams& multiclass, const StripSegmenter& segmenter,
               const ThresholdConfig& thresholds) {
  return decide_with_probs(predict_multiclass(multiclass, strip), strip, segmenter, thresholds);
}

bool binary_disagrees(double p_positive, const ClassProbabilities& probs) {
  return (p_positive >= 0.5) != is_positive(probs.argmax());
}

std::string verdict_to_json(const Verdict& v) {
  nlohmann::json j;
  j["outcome"] = to_string(v.outcome);
  j["detail"] = to_string(v.detail);
  j["confidence"] = v.confidence;
  j["provenance"] = to_string(v.provenance);
  if (v.segmentation_areas) {
    for (const auto& [band, a] : *v.segmentation_areas) j["segmentation_areas"][std::string(to_string(band))] = a;
  }
  return j.dump();
}

}  // namespace lfdr
