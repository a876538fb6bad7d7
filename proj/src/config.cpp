#include "lfdr/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json window_json(const RowWindow& w) { return json::array({w.begin, w.end}); }

void read_window(const json& j, const char* key, RowWindow& w) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  w = {a.at(0).get<int>(), a.at(1).get<int>()};
  if (w.begin < 0 || w.end > kStripHeight || w.begin >= w.end) {
    throw Error(ErrorCode::InvalidConfig, std::string("band window ") + key + " must satisfy 0 <= begin < end <= 875");
  }
}

json seg_json(const SegConfig& s) {
  return {{"band_contrast", s.band_contrast},
          {"peak_fraction", s.peak_fraction},
          {"smoothing_radius", s.smoothing_radius},
          {"windows",
           {{"control", window_json(s.windows.control)},
            {"igg", window_json(s.windows.igg)},
            {"igm", window_json(s.windows.igm)}}}};
}

void read_seg(const json& j, SegConfig& s) {
  read(j, "band_contrast", s.band_contrast);
  read(j, "peak_fraction", s.peak_fraction);
  read(j, "smoothing_radius", s.smoothing_radius);
  if (j.contains("windows")) {
    const auto& w = j.at("windows");
    read_window(w, "control", s.windows.control);
    read_window(w, "igg", s.windows.igg);
    read_window(w, "igm", s.windows.igm);
  }
  if (s.smoothing_radius < 0 || s.peak_fraction < 0.0 || s.peak_fraction > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "segmenter smoothing_radius must be >= 0 and peak_fraction in [0, 1]");
  }
}

}  // namespace

AppConfig config_from_json(const std::string& text) {
  AppConfig c;
  try {
    const json j = json::parse(text);
    if (j.value("schema_version", kConfigSchemaVersion) != kConfigSchemaVersion) {
      throw Error(ErrorCode::SchemaVersion, "unsupported config schema_version " + j.at("schema_version").dump());
    }
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      read(t, "classification", c.thresholds.classification);
      read(t, "area", c.thresholds.area);
      read(t, "uncertainty", c.thresholds.uncertainty);
    }
    if (j.contains("quality")) {
      const auto& q = j.at("quality");
      read(q, "min_blur", c.quality.min_blur);
      read(q, "min_luma", c.quality.min_luma);
      read(q, "max_luma", c.quality.max_luma);
      read(q, "saturation_level", c.quality.saturation_level);
      read(q, "max_saturated_fraction", c.quality.max_saturated_fraction);
      read(q, "min_megapixels", c.quality.min_megapixels);
    }
    if (j.contains("segmenter")) read_seg(j.at("segmenter"), c.segmenter);
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      read(d, "aspect_tolerance", c.detector.aspect_tolerance);
      read(d, "max_rotation_deg", c.detector.max_rotation_deg);
      read(d, "rotation_slack_deg", c.detector.rotation_slack_deg);
      read(d, "min_body_fraction", c.detector.min_body_fraction);
      read(d, "min_window_pixels", c.detector.min_window_pixels);
      read(d, "closing_size", c.detector.closing_size);
      read(d, "working_scale", c.detector.working_scale);
      read(d, "ambiguity_margin", c.detector.ambiguity_margin);
    }
    if (j.contains("active_learning")) {
      const auto& a = j.at("active_learning");
      if (a.contains("strategy")) {
        const auto s = parse_strategy(a.at("strategy").get<std::string>());
        if (!s) throw Error(ErrorCode::InvalidConfig, "unknown strategy " + a.at("strategy").dump());
        c.active_learning.strategy = *s;
      }
      read(a, "score_trigger", c.active_learning.score_trigger);
      read(a, "retrain_every", c.active_learning.retrain_every);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      auto& tc = c.active_learning.train;
      read(t, "epochs", tc.epochs);
      read(t, "learning_rate", tc.learning_rate);
      read(t, "l2", tc.l2);
      read(t, "class_weighting", tc.class_weighting);
      read(t, "batch_size", tc.batch_size);
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      read(p, "data_dir", c.paths.data_dir);
      read(p, "model_dir", c.paths.model_dir);
      read(p, "journal", c.paths.journal);
    }
    if (j.contains("service")) {
      const auto& s = j.at("service");
      read(s, "host", c.service.host);
      read(s, "port", c.service.port);
      read(s, "max_body_bytes", c.service.max_body_bytes);
      read(s, "auth_token", c.service.auth_token);
      read(s, "http_workers", c.service.http_workers);
      read(s, "compute_slots", c.service.compute_slots);
      read(s, "ui_dir", c.service.ui_dir);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.what());
  }
  c.thresholds.validate();
  if (c.detector.working_scale < 1 || c.detector.working_scale > 8) {
    throw Error(ErrorCode::InvalidConfig, "detector.working_scale must lie in [1, 8]");
  }
  if (c.service.port < 0 || c.service.port > 65535) throw Error(ErrorCode::InvalidConfig, "service.port out of range");
  return c;
}

std::string config_to_json(const AppConfig& c) {
  const auto& tc = c.active_learning.train;
  const json j = {
      {"schema_version", kConfigSchemaVersion},
      {"thresholds",
       {{"classification", c.thresholds.classification},
        {"area", c.thresholds.area},
        {"uncertainty", c.thresholds.uncertainty}}},
      {"quality",
       {{"min_blur", c.quality.min_blur},
        {"min_luma", c.quality.min_luma},
        {"max_luma", c.quality.max_luma},
        {"saturation_level", c.quality.saturation_level},
        {"max_saturated_fraction", c.quality.max_saturated_fraction},
        {"min_megapixels", c.quality.min_megapixels}}},
      {"segmenter", seg_json(c.segmenter)},
      {"detector",
       {{"aspect_tolerance", c.detector.aspect_tolerance},
        {"max_rotation_deg", c.detector.max_rotation_deg},
        {"rotation_slack_deg", c.detector.rotation_slack_deg},
        {"min_body_fraction", c.detector.min_body_fraction},
        {"min_window_pixels", c.detector.min_window_pixels},
        {"closing_size", c.detector.closing_size},
        {"working_scale", c.detector.working_scale},
        {"ambiguity_margin", c.detector.ambiguity_margin}}},
      {"active_learning",
       {{"strategy", to_string(c.active_learning.strategy)},
        {"score_trigger", c.active_learning.score_trigger},
        {"retrain_every", c.active_learning.retrain_every}}},
      {"training",
       {{"epochs", tc.epochs},
        {"learning_rate", tc.learning_rate},
        {"l2", tc.l2},
        {"class_weighting", tc.class_weighting},
        {"batch_size", tc.batch_size}}},
      {"paths", {{"data_dir", c.paths.data_dir}, {"model_dir", c.paths.model_dir}, {"journal", c.paths.journal}}},
      {"service",
       {{"host", c.service.host},
        {"port", c.service.port},
        {"max_body_bytes", c.service.max_body_bytes},
        {"auth_token", c.service.auth_token},
        {"http_workers", c.service.http_workers},
        {"compute_slots", c.service.compute_slots},
        {"ui_dir", c.service.ui_dir}}}};
  return j.dump(2);
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string seg_config_to_json(const SegConfig& config) {
  json j = seg_json(config);
  j["schema_version"] = kConfigSchemaVersion;
  return j.dump(2);
}

SegConfig seg_config_from_json(const std::string& text) {
  SegConfig s;
  try {
    const json j = json::parse(text);
    if (j.value("schema_version", kConfigSchemaVersion) != kConfigSchemaVersion) {
      throw Error(ErrorCode::SchemaVersion, "unsupported segmenter schema_version");
    }
    read_seg(j, s);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed segmenter config: ") + e.what());
  }
  return s;
}

}  // namespace lfdr
