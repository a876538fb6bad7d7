#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lfdr/classifier.hpp"
#include "lfdr/decision.hpp"

namespace lfdr {

enum class UncertaintyStrategy { LeastConfidence, Margin, Entropy };

std::string_view to_string(UncertaintyStrategy s);
std::optional<UncertaintyStrategy> parse_strategy(std::string_view name);

double uncertainty(const ClassProbabilities& probs, UncertaintyStrategy strategy);

enum class ItemStatus { Queued, Labeled, Expired };
std::string_view to_string(ItemStatus s);

struct ALQueryItem {
  std::string id;
  std::string strip_ref;
  ClassProbabilities probs;
  double uncertainty = 0.0;
  ItemStatus status = ItemStatus::Queued;
  std::uint64_t sequence = 0;  // enqueue order
  std::optional<ClassLabel> label;
  std::string labeler;
  std::string labeled_at;
  FeatureVector features{};

  bool operator==(const ALQueryItem&) const = default;
};

enum class SampleOrigin { Seed, HumanLoop };

struct PoolSample {
  std::string strip_ref;
  ClassLabel label = ClassLabel::Negative;
  SampleOrigin origin = SampleOrigin::Seed;
  FeatureVector features{};

  bool operator==(const PoolSample&) const = default;
};

struct LabeledPool {
  std::vector<PoolSample> samples;
  std::uint64_t version = 0;

  LabeledFeatures as_training_set() const;
  bool operator==(const LabeledPool&) const = default;
};

struct ALConfig {
  UncertaintyStrategy strategy = UncertaintyStrategy::LeastConfidence;
  /// Enqueue trigger for Margin and Entropy; LeastConfidence uses
  /// max p < tau_u instead.
  double score_trigger = 0.40;
  /// Accepted labels between automatic retrains; 0 disables.
  int retrain_every = 10;
  TrainConfig train;
};

/// Warm-started full-pool retrain with no validation split; the result
/// carries prev's model_version + 1 and the pool's version.
ModelParams retrain_step(const LabeledPool& pool, const ModelParams& prev, const TrainConfig& config);

/// Content hash of a strip's pixels, usable as a strip reference.
std::string strip_reference(const StripImage& strip);

/// Query queue plus labeled pool. All mutations are serialized and, when a
/// journal path is set, appended to it as JSON lines before returning.
class ActiveLearner {
 public:
  ActiveLearner(ALConfig config, ThresholdConfig thresholds, std::string journal_path = {});

  /// Rebuilds state from an existing journal and keeps appending to it.
  static std::unique_ptr<ActiveLearner> replay(ALConfig config, ThresholdConfig thresholds,
                                               const std::string& journal_path);

  /// Adds initial labeled samples without bumping the pool version.
  void seed(const std::vector<PoolSample>& samples);

  std::optional<ALQueryItem> maybe_enqueue(const std::string& strip_ref, const ClassProbabilities& probs,
                                           const FeatureVector& features);
  std::vector<ALQueryItem> next_queries(std::size_t k) const;
  /// Returns the new pool version.
  std::uint64_t submit_label(const std::string& item_id, ClassLabel label, const std::string& labeler);
  void expire(const std::string& item_id);
  void record_retrain(std::uint64_t model_version);

  /// True once retrain_every labels have arrived since the last retrain.
  bool retrain_due() const;

  LabeledPool pool() const;
  std::uint64_t pool_version() const;
  std::size_t queue_depth() const;
  std::optional<ALQueryItem> item(const std::string& id) const;
  std::optional<std::string> queued_item_for(const std::string& strip_ref) const;
  std::uint64_t last_retrain_pool_version() const;
  const ALConfig& config() const noexcept { return config_; }

 private:
  struct Event;
  void apply(const Event& e);
  void append(const Event& e);

  ALConfig config_;
  ThresholdConfig thresholds_;
  std::string journal_path_;
  std::ofstream journal_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ALQueryItem> items_;
  LabeledPool pool_;
  std::uint64_t next_sequence_ = 1;
  std::uint64_t last_retrain_pool_version_ = 0;
  std::uint64_t model_version_ = 0;
};

/// One simulated loop: start from `initial` labeled pool indices, add
/// `per_round` labels per round chosen by uncertainty (or uniformly at random
/// when `random_baseline`), retrain after each round, and record validation
/// accuracy after each round.
struct ALSimulation {
  std::vector<std::size_t> initial;
  std::size_t rounds = 10;
  std::size_t per_round = 10;
  bool random_baseline = false;
  UncertaintyStrategy strategy = UncertaintyStrategy::LeastConfidence;
  std::uint64_t seed = 0;
  TrainConfig train;
};

std::vector<double> simulate_al_loop(const LabeledFeatures& pool, const LabeledFeatures& val, const ALSimulation& sim);

}  // namespace lfdr
