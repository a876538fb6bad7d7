#include "lfdr/active_learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

using nlohmann::json;

std::string_view to_string(UncertaintyStrategy s) {
  switch (s) {
    case UncertaintyStrategy::LeastConfidence: return "LeastConfidence";
    case UncertaintyStrategy::Margin: return "Margin";
    case UncertaintyStrategy::Entropy: return "Entropy";
  }
  return "LeastConfidence";
}

std::optional<UncertaintyStrategy> parse_strategy(std::string_view name) {
  for (auto s : {UncertaintyStrategy::LeastConfidence, UncertaintyStrategy::Margin, UncertaintyStrategy::Entropy}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::Queued: return "Queued";
    case ItemStatus::Labeled: return "Labeled";
    case ItemStatus::Expired: return "Expired";
  }
  return "Queued";
}

double uncertainty(const ClassProbabilities& probs, UncertaintyStrategy strategy) {
  switch (strategy) {
    case UncertaintyStrategy::LeastConfidence: return 1.0 - probs.max();
    case UncertaintyStrategy::Margin: {
      std::array<double, kNumClasses> s = probs.p;
      std::partial_sort(s.begin(), s.begin() + 2, s.end(), std::greater<>());
      return 1.0 - (s[0] - s[1]);
    }
    case UncertaintyStrategy::Entropy: {
      double h = 0.0;
      for (double p : probs.p) {
        if (p > 0.0) h -= p * std::log(p);
      }
      return std::clamp(h / std::log(static_cast<double>(kNumClasses)), 0.0, 1.0);
    }
  }
  return 0.0;
}

LabeledFeatures LabeledPool::as_training_set() const {
  LabeledFeatures out;
  for (const auto& s : samples) out.add(s.features, s.label);
  return out;
}

ModelParams retrain_step(const LabeledPool& pool, const ModelParams& prev, const TrainConfig& config) {
  TrainConfig full = config;
  full.batch_size = 0;
  ModelParams next = train_multiclass(pool.as_training_set(), {}, full, &prev).params;
  next.meta.pool_version = pool.version;
  return next;
}

std::string strip_reference(const StripImage& strip) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : strip.raster().pixels()) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

json features_json(const FeatureVector& f) { return json(std::vector<double>(f.begin(), f.end())); }

FeatureVector features_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != static_cast<std::size_t>(kFeatureCount)) throw Error(ErrorCode::ShapeMismatch, "feature length");
  FeatureVector f{};
  std::copy(v.begin(), v.end(), f.begin());
  return f;
}

ClassLabel label_from(const json& j) {
  const auto l = parse_class_label(j.get<std::string>());
  if (!l) throw Error(ErrorCode::InvalidConfig, "unknown class label " + j.dump());
  return *l;
}

}  // namespace

struct ActiveLearner::Event {
  std::string type;
  std::string timestamp;
  json payload;
};

ActiveLearner::ActiveLearner(ALConfig config, ThresholdConfig thresholds, std::string journal_path)
    : config_(std::move(config)), thresholds_(thresholds), journal_path_(std::move(journal_path)) {
  if (!journal_path_.empty()) {
    journal_.open(journal_path_, std::ios::app);
    if (!journal_) throw Error(ErrorCode::Io, "cannot open journal " + journal_path_);
  }
}

std::unique_ptr<ActiveLearner> ActiveLearner::replay(ALConfig config, ThresholdConfig thresholds,
                                                     const std::string& journal_path) {
  std::vector<Event> events;
  {
    std::ifstream in(journal_path);
    std::string line;
    std::size_t n = 0;
    while (in && std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        events.push_back({j.at("event_type").get<std::string>(), j.at("timestamp").get<std::string>(), j.at("payload")});
      } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, "journal line " + std::to_string(n) + ": " + e.what());
      }
    }
  }
  auto learner = std::make_unique<ActiveLearner>(std::move(config), thresholds, journal_path);
  for (const auto& e : events) learner->apply(e);
  return learner;
}

void ActiveLearner::append(const Event& e) {
  if (!journal_.is_open()) return;
  journal_ << json{{"event_type", e.type}, {"timestamp", e.timestamp}, {"payload", e.payload}}.dump() << '\n';
  journal_.flush();
  if (!journal_) throw Error(ErrorCode::Io, "journal write failed: " + journal_path_);
}

void ActiveLearner::apply(const Event& e) {
  const json& p = e.payload;
  if (e.type == "Seeded") {
    for (const auto& s : p.at("samples")) {
      pool_.samples.push_back({s.at("strip_ref").get<std::string>(), label_from(s.at("label")), SampleOrigin::Seed,
                               features_from(s.at("features"))});
    }
  } else if (e.type == "Enqueued") {
    ALQueryItem item;
    item.id = p.at("id").get<std::string>();
    item.strip_ref = p.at("strip_ref").get<std::string>();
    const auto probs = p.at("probs").get<std::vector<double>>();
    if (probs.size() != static_cast<std::size_t>(kNumClasses)) throw Error(ErrorCode::ShapeMismatch, "probs length");
    std::copy(probs.begin(), probs.end(), item.probs.p.begin());
    item.uncertainty = p.at("uncertainty").get<double>();
    item.sequence = p.at("sequence").get<std::uint64_t>();
    item.features = features_from(p.at("features"));
    next_sequence_ = std::max(next_sequence_, item.sequence + 1);
    items_[item.id] = std::move(item);
  } else if (e.type == "Labeled") {
    ALQueryItem& item = items_.at(p.at("id").get<std::string>());
    item.status = ItemStatus::Labeled;
    item.label = label_from(p.at("label"));
    item.labeler = p.at("labeler").get<std::string>();
    item.labeled_at = e.timestamp;
    pool_.samples.push_back({item.strip_ref, *item.label, SampleOrigin::HumanLoop, item.features});
    ++pool_.version;
  } else if (e.type == "Expired") {
    items_.at(p.at("id").get<std::string>()).status = ItemStatus::Expired;
  } else if (e.type == "Retrained") {
    model_version_ = p.at("model_version").get<std::uint64_t>();
    last_retrain_pool_version_ = p.at("pool_version").get<std::uint64_t>();
  } else {
    throw Error(ErrorCode::Io, "unknown journal event " + e.type);
  }
}

void ActiveLearner::seed(const std::vector<PoolSample>& samples) {
  std::unique_lock lock(mutex_);
  json arr = json::array();
  for (const auto& s : samples) {
    arr.push_back({{"strip_ref", s.strip_ref}, {"label", to_string(s.label)}, {"features", features_json(s.features)}});
  }
  const Event e{"Seeded", utc_now(), {{"samples", std::move(arr)}}};
  append(e);
  apply(e);
}

std::optional<ALQueryItem> ActiveLearner::maybe_enqueue(const std::string& strip_ref, const ClassProbabilities& probs,
                                                        const FeatureVector& features) {
  const double u = uncertainty(probs, config_.strategy);
  const bool wanted = config_.strategy == UncertaintyStrategy::LeastConfidence ? probs.max() < thresholds_.uncertainty
                                                                               : u >= config_.score_trigger;
  if (!wanted) return std::nullopt;

  std::unique_lock lock(mutex_);
  for (const auto& [id, item] : items_) {
    if (item.strip_ref == strip_ref && item.status == ItemStatus::Queued) {
      throw Error(ErrorCode::DuplicateStrip, "strip " + strip_ref + " is already queued as " + id);
    }
  }
  const std::uint64_t seq = next_sequence_;
  char id[24];
  std::snprintf(id, sizeof id, "q%06llu", static_cast<unsigned long long>(seq));
  const Event e{"Enqueued", utc_now(),
                {{"id", id},
                 {"strip_ref", strip_ref},
                 {"probs", std::vector<double>(probs.p.begin(), probs.p.end())},
                 {"uncertainty", u},
                 {"sequence", seq},
                 {"features", features_json(features)}}};
  append(e);
  apply(e);
  return items_.at(id);
}

std::vector<ALQueryItem> ActiveLearner::next_queries(std::size_t k) const {
  std::shared_lock lock(mutex_);
  std::vector<const ALQueryItem*> queued;
  for (const auto& [id, item] : items_) {
    if (item.status == ItemStatus::Queued) queued.push_back(&item);
  }
  std::sort(queued.begin(), queued.end(), [](const ALQueryItem* a, const ALQueryItem* b) {
    if (a->uncertainty != b->uncertainty) return a->uncertainty > b->uncertainty;
    return a->sequence < b->sequence;
  });
  std::vector<ALQueryItem> out;
  for (std::size_t i = 0; i < queued.size() && i < k; ++i) out.push_back(*queued[i]);
  return out;
}

std::uint64_t ActiveLearner::submit_label(const std::string& item_id, ClassLabel label, const std::string& labeler) {
  std::unique_lock lock(mutex_);
  const auto it = items_.find(item_id);
  if (it == items_.end()) throw Error(ErrorCode::UnknownItem, "no queue item " + item_id);
  if (it->second.status != ItemStatus::Queued) {
    throw Error(ErrorCode::AlreadyLabeled, "item " + item_id + " is " + std::string(to_string(it->second.status)));
  }
  const Event e{"Labeled", utc_now(), {{"id", item_id}, {"label", to_string(label)}, {"labeler", labeler}}};
  append(e);
  apply(e);
  return pool_.version;
}

void ActiveLearner::expire(const std::string& item_id) {
  std::unique_lock lock(mutex_);
  const auto it = items_.find(item_id);
  if (it == items_.end()) throw Error(ErrorCode::UnknownItem, "no queue item " + item_id);
  if (it->second.status != ItemStatus::Queued) {
    throw Error(ErrorCode::AlreadyLabeled, "item " + item_id + " is " + std::string(to_string(it->second.status)));
  }
  const Event e{"Expired", utc_now(), {{"id", item_id}}};
  append(e);
  apply(e);
}

void ActiveLearner::record_retrain(std::uint64_t model_version) {
  std::unique_lock lock(mutex_);
  const Event e{"Retrained", utc_now(), {{"model_version", model_version}, {"pool_version", pool_.version}}};
  append(e);
  apply(e);
}

bool ActiveLearner::retrain_due() const {
  std::shared_lock lock(mutex_);
  return config_.retrain_every > 0 &&
         pool_.version - last_retrain_pool_version_ >= static_cast<std::uint64_t>(config_.retrain_every);
}

LabeledPool ActiveLearner::pool() const {
  std::shared_lock lock(mutex_);
  return pool_;
}

std::uint64_t ActiveLearner::pool_version() const {
  std::shared_lock lock(mutex_);
  return pool_.version;
}

std::size_t ActiveLearner::queue_depth() const {
  std::shared_lock lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [](const auto& kv) { return kv.second.status == ItemStatus::Queued; }));
}

std::optional<ALQueryItem> ActiveLearner::item(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = items_.find(id);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> ActiveLearner::queued_item_for(const std::string& strip_ref) const {
  std::shared_lock lock(mutex_);
  for (const auto& [id, item] : items_) {
    if (item.strip_ref == strip_ref && item.status == ItemStatus::Queued) return id;
  }
  return std::nullopt;
}

std::uint64_t ActiveLearner::last_retrain_pool_version() const {
  std::shared_lock lock(mutex_);
  return last_retrain_pool_version_;
}

std::vector<double> simulate_al_loop(const LabeledFeatures& pool, const LabeledFeatures& val, const ALSimulation& sim) {
  std::vector<bool> taken(pool.size(), false);
  LabeledFeatures labeled;
  for (std::size_t i : sim.initial) {
    if (i >= pool.size()) throw Error(ErrorCode::InvalidSplit, "initial index out of range");
    if (!taken[i]) labeled.add(pool.x[i], pool.y[i]);
    taken[i] = true;
  }
  TrainConfig cfg = sim.train;
  cfg.batch_size = 0;
  ModelParams model = train_multiclass(labeled, {}, cfg).params;
  std::mt19937_64 rng(sim.seed);

  const auto accuracy = [&](const ModelParams& m) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < val.size(); ++i) ok += predict_multiclass(m, val.x[i]).argmax() == val.y[i];
    return val.size() ? static_cast<double>(ok) / static_cast<double>(val.size()) : 0.0;
  };

  std::vector<double> curve;
  for (std::size_t round = 0; round < sim.rounds; ++round) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i]) candidates.push_back(i);
    }
    if (sim.random_baseline) {
      std::shuffle(candidates.begin(), candidates.end(), rng);
    } else {
      std::vector<double> score(pool.size(), 0.0);
      for (std::size_t i : candidates) score[i] = uncertainty(predict_multiclass(model, pool.x[i]), sim.strategy);
      std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    }
    for (std::size_t k = 0; k < sim.per_round && k < candidates.size(); ++k) {
      taken[candidates[k]] = true;
      labeled.add(pool.x[candidates[k]], pool.y[candidates[k]]);
    }
    model = train_multiclass(labeled, {}, cfg, &model).params;
    curve.push_back(accuracy(model));
  }
  return curve;
}

}  // namespace lfdr
