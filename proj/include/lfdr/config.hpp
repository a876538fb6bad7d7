#pragma once

#include <cstdint>
#include <string>

#include "lfdr/active_learning.hpp"
#include "lfdr/decision.hpp"
#include "lfdr/imaging.hpp"
#include "lfdr/segmenter.hpp"
#include "lfdr/strip_extractor.hpp"

namespace lfdr {

struct PathsConfig {
  std::string data_dir = "data";
  std::string model_dir = "models";
  std::string journal = "models/journal.jsonl";
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_body_bytes = 20u * 1024 * 1024;
  /// Empty disables auth.
  std::string auth_token;
  /// HTTP worker threads; compute concurrency is capped separately.
  int http_workers = 16;
  /// 0 means hardware concurrency.
  int compute_slots = 0;
  /// Static files served under /ui when non-empty.
  std::string ui_dir;
};

struct AppConfig {
  ThresholdConfig thresholds;
  QualityConfig quality;
  SegConfig segmenter;
  DetectorConfig detector;
  ALConfig active_learning;
  PathsConfig paths;
  ServiceConfig service;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Missing keys keep their defaults; an unknown schema_version or a bad value
/// throws.
AppConfig config_from_json(const std::string& text);
std::string config_to_json(const AppConfig& config);
AppConfig load_config(const std::string& path);

std::string seg_config_to_json(const SegConfig& config);
SegConfig seg_config_from_json(const std::string& text);

}  // namespace lfdr
