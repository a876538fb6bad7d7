#include "lfdr/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void run_stages(const RasterImage& decoded, const ModelSnapshot& models, const AppConfig& config, Analysis& a) {
  auto t = Clock::now();
  a.quality = quality_gate(decoded, config.quality);
  a.timing_ms["quality"] = ms_since(t);
  if (!a.quality.accepted) return;

  t = Clock::now();
  const RasterImage normalized = normalize_resolution(decoded);
  a.timing_ms["normalize"] = ms_since(t);

  t = Clock::now();
  a.detection = ClassicalDetector(config.detector).detect(normalized);
  a.timing_ms["detect"] = ms_since(t);

  t = Clock::now();
  a.strip = extract_strip(normalized, *a.detection, config.segmenter.windows);
  a.timing_ms["extract"] = ms_since(t);

  t = Clock::now();
  const FeatureVector f = extract_features(*a.strip);
  a.probs = predict_multiclass(models.multiclass, f);
  if (models.binary) {
    a.binary_positive = predict_binary(*models.binary, f);
    a.binary_disagreement = binary_disagrees(*a.binary_positive, a.probs);
  }
  a.timing_ms["classify"] = ms_since(t);

  t = Clock::now();
  a.verdict = decide_with_probs(a.probs, *a.strip, *models.segmenter, config.thresholds);
  if (a.verdict->provenance == Provenance::Fused) a.timing_ms["segment"] = ms_since(t);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ModelSnapshot load_model_dir(const std::string& dir, const SegConfig& fallback_seg) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  ModelSnapshot s;
  s.multiclass = load_model((root / "multiclass.json").string());
  if (s.multiclass.kind != ModelKind::Multiclass) throw Error(ErrorCode::ShapeMismatch, "multiclass.json is not multiclass");
  if (fs::exists(root / "binary.json")) s.binary = load_model((root / "binary.json").string());
  const SegConfig seg = fs::exists(root / "segmenter.json") ? seg_config_from_json(slurp(root / "segmenter.json")) : fallback_seg;
  s.segmenter = std::make_shared<BandSegmenter>(seg);
  return s;
}

Analysis analyze_image(std::span<const std::uint8_t> bytes, const ModelSnapshot& models, const AppConfig& config) {
  Analysis a;
  const auto start = Clock::now();
  auto t = Clock::now();
  const RasterImage decoded = decode_image(bytes);
  a.timing_ms["decode"] = ms_since(t);
  run_stages(decoded, models, config, a);
  a.timing_ms["total"] = ms_since(start);
  return a;
}

Analysis analyze_raster(const RasterImage& img, const ModelSnapshot& models, const AppConfig& config) {
  Analysis a;
  const auto start = Clock::now();
  run_stages(img, models, config, a);
  a.timing_ms["total"] = ms_since(start);
  return a;
}

LabeledFeatures to_features(const std::vector<StripSample>& strips) {
  LabeledFeatures out;
  for (const auto& s : strips) out.add(extract_features(s.strip), s.label);
  return out;
}

std::vector<SegExample> to_seg_examples(const std::vector<StripSample>& strips) {
  std::vector<SegExample> out;
  for (const auto& s : strips) {
    if (s.label != ClassLabel::Inconclusive) out.push_back({s.strip, s.label, s.masks.at(s.label)});
  }
  return out;
}

TrainedModels train_models(const std::vector<StripSample>& train, const std::vector<StripSample>& val,
                           const TrainConfig& config, const SegConfig& seg_base) {
  const LabeledFeatures tr = to_features(train);
  const LabeledFeatures va = to_features(val);
  TrainedModels m{train_multiclass(tr, va, config), train_binary(tr, va, config), {}};
  m.segmenter = fit_seg_thresholds(to_seg_examples(train), seg_base);
  return m;
}

void save_model_dir(const TrainedModels& models, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
  save_model(models.multiclass.params, (root / "multiclass.json").string());
  save_model(models.binary.params, (root / "binary.json").string());
  write_loss_csv(models.multiclass.curves, (root / "multiclass_loss.csv").string());
  write_loss_csv(models.binary.curves, (root / "binary_loss.csv").string());
  std::ofstream seg(root / "segmenter.json");
  if (!seg) throw Error(ErrorCode::Io, "cannot write segmenter.json in " + dir);
  seg << seg_config_to_json(models.segmenter) << '\n';
}

std::string quality_to_json(const QualityReport& q) {
  nlohmann::json j = {{"accepted", q.accepted},
                      {"blur_score", q.blur_score},
                      {"mean_luma", q.mean_luma},
                      {"megapixels", q.megapixels},
                      {"saturated_fraction", q.saturated_fraction},
                      {"reasons", q.reasons}};
  return j.dump();
}

}  // namespace lfdr
