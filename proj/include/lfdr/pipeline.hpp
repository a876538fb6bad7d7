#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "lfdr/classifier.hpp"
#include "lfdr/config.hpp"
#include "lfdr/decision.hpp"
#include "lfdr/segmenter.hpp"
#include "lfdr/strip_extractor.hpp"
#include "lfdr/synthgen.hpp"

namespace lfdr {

/// Everything inference needs, immutable once built. Swapped as a whole.
struct ModelSnapshot {
  ModelParams multiclass;
  std::optional<ModelParams> binary;
  std::shared_ptr<const StripSegmenter> segmenter;

  std::uint64_t version() const noexcept { return multiclass.meta.model_version; }
};

/// Loads multiclass.json, binary.json (optional) and segmenter.json from a
/// model directory; the segmenter falls back to `fallback_seg` when absent.
ModelSnapshot load_model_dir(const std::string& dir, const SegConfig& fallback_seg);

struct Analysis {
  QualityReport quality;
  std::optional<CassetteDetection> detection;
  std::optional<StripImage> strip;
  ClassProbabilities probs;
  std::optional<double> binary_positive;
  bool binary_disagreement = false;
  /// Empty when the quality gate rejected the image.
  std::optional<Verdict> verdict;
  /// Stage name -> milliseconds; "segment" only when fused.
  std::map<std::string, double> timing_ms;
};

/// decode -> quality gate -> normalize -> detect -> extract -> classify ->
/// decide. Decoding and detection errors propagate as lfdr::Error.
Analysis analyze_image(std::span<const std::uint8_t> bytes, const ModelSnapshot& models, const AppConfig& config);

/// Same as analyze_image from an already decoded raster (no decode timing).
Analysis analyze_raster(const RasterImage& img, const ModelSnapshot& models, const AppConfig& config);

struct TrainedModels {
  TrainResult multiclass;
  TrainResult binary;
  SegConfig segmenter;
};

LabeledFeatures to_features(const std::vector<StripSample>& strips);
std::vector<SegExample> to_seg_examples(const std::vector<StripSample>& strips);

/// Trains both classifiers on `train` (checkpointed on `val`) and fits the
/// segmenter thresholds on `train`.
TrainedModels train_models(const std::vector<StripSample>& train, const std::vector<StripSample>& val,
                           const TrainConfig& config, const SegConfig& seg_base);

/// Writes multiclass.json, binary.json, segmenter.json and the loss CSVs.
void save_model_dir(const TrainedModels& models, const std::string& dir);

std::string quality_to_json(const QualityReport& q);

}  // namespace lfdr
