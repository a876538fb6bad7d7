#include "lfdr/service.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", code}, {"message", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedImage:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::InvalidDimensions: return 400;
    case ErrorCode::NoCassetteFound:
    case ErrorCode::AmbiguousDetection:
    case ErrorCode::QuadOutOfBounds:
    case ErrorCode::SingleClassDataset:
    case ErrorCode::EmptyDataset: return 422;
    case ErrorCode::UnknownItem: return 404;
    case ErrorCode::AlreadyLabeled:
    case ErrorCode::DuplicateStrip: return 409;
    default: return 500;
  }
}

json probs_json(const ClassProbabilities& p) {
  json j;
  for (ClassLabel c : kAllClasses) j[std::string(to_string(c))] = p[c];
  return j;
}

json item_json(const ALQueryItem& item) {
  json j = {{"id", item.id},
            {"strip_ref", item.strip_ref},
            {"strip_url", "/strips/" + item.strip_ref + ".png"},
            {"probs", probs_json(item.probs)},
            {"uncertainty", item.uncertainty},
            {"status", to_string(item.status)},
            {"sequence", item.sequence}};
  if (item.label) {
    j["label"] = to_string(*item.label);
    j["labeler"] = item.labeler;
  }
  return j;
}

unsigned compute_slots(const ServiceConfig& s) {
  if (s.compute_slots > 0) return static_cast<unsigned>(std::min(s.compute_slots, 1024));
  return std::clamp(std::thread::hardware_concurrency(), 1u, 1024u);
}

void save_model_atomically(const ModelParams& params, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = fs::path(dir) / "multiclass.json.tmp";
  save_model(params, tmp.string());
  fs::rename(tmp, fs::path(dir) / "multiclass.json");
}

}  // namespace

struct Service::Server {
  httplib::Server http;
  std::thread thread;
};

Service::Service(AppConfig config, std::unique_ptr<ActiveLearner> learner)
    : config_(std::move(config)), learner_(std::move(learner)), compute_(compute_slots(config_.service)) {
  if (!learner_) learner_ = std::make_unique<ActiveLearner>(config_.active_learning, config_.thresholds);
}

Service::~Service() { stop(); }

void Service::install(ModelSnapshot snapshot) {
  auto next = std::make_shared<const ModelSnapshot>(std::move(snapshot));
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(next);
}

std::shared_ptr<const ModelSnapshot> Service::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::uint64_t Service::segmenter_invocations() const {
  const auto s = snapshot();
  return s ? s->segmenter->invocations() : 0;
}

bool Service::authorized(const HttpRequest& req) const {
  if (config_.service.auth_token.empty()) return true;
  const auto it = req.headers.find("Authorization");
  return it != req.headers.end() && it->second == "Bearer " + config_.service.auth_token;
}

HttpResponse Service::handle(const HttpRequest& req) {
  static const std::regex kLabel(R"(^/queue/([A-Za-z0-9_-]+)/label$)");
  static const std::regex kStrip(R"(^/strips/([0-9a-f]+)\.png$)");
  try {
    if (req.method == "GET" && req.path == "/healthz") return healthz();
    if (!authorized(req)) return error_response(401, "Unauthorized", "missing or invalid bearer token");
    std::smatch m;
    if (req.method == "POST" && req.path == "/analyze") return analyze(req);
    if (req.method == "GET" && req.path == "/queue") return queue(req);
    if (req.method == "POST" && std::regex_match(req.path, m, kLabel)) return label(req, m[1].str());
    if (req.method == "POST" && req.path == "/retrain") return retrain();
    if (req.method == "GET" && req.path == "/metrics") return metrics();
    if (req.method == "GET" && std::regex_match(req.path, m, kStrip)) return strip_png(m[1].str());
    return error_response(404, "NotFound", "no route for " + req.method + " " + req.path);
  } catch (const Error& e) {
    ++errors_;
    return error_response(status_for(e.code()), error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    ++errors_;
    return error_response(500, "Internal", e.what());
  }
}

HttpResponse Service::analyze(const HttpRequest& req) {
  const auto models = snapshot();
  if (!models) return error_response(503, "ModelNotLoaded", "models are still loading");
  if (req.body.size() > config_.service.max_body_bytes) {
    return error_response(413, "PayloadTooLarge", "request body exceeds the configured limit");
  }
  if (req.body.empty()) return error_response(400, "MalformedImage", "empty upload");

  const auto wait_start = std::chrono::steady_clock::now();
  compute_.acquire();
  const double wait_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wait_start).count();
  Analysis a;
  try {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
    a = analyze_image({bytes, req.body.size()}, *models, config_);
  } catch (...) {
    compute_.release();
    throw;
  }
  compute_.release();

  const json quality = json::parse(quality_to_json(a.quality));
  if (!a.verdict) {
    ++rejected_;
    return json_response(422, {{"error", "QualityRejected"},
                                {"message", "image rejected by the quality gate"},
                                {"quality", quality},
                                {"timing_ms", a.timing_ms}});
  }

  ++requests_;
  const Verdict& v = *a.verdict;
  (v.provenance == Provenance::ClassifierFastPath ? fast_path_ : fused_)++;

  const std::string ref = strip_reference(*a.strip);
  std::optional<std::string> item_id;
  try {
    if (auto item = learner_->maybe_enqueue(ref, a.probs, extract_features(*a.strip))) item_id = item->id;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DuplicateStrip) throw;
    item_id = learner_->queued_item_for(ref);
  }
  if (item_id) {
    const auto png = encode_png(a.strip->raster());
    std::lock_guard lock(strips_mutex_);
    strip_png_.emplace(ref, std::string(png.begin(), png.end()));
  }

  json body = {{"verdict", json::parse(verdict_to_json(v))},
               {"quality", quality},
               {"timing_ms", a.timing_ms},
               {"queue_wait_ms", wait_ms},
               {"queued_for_review", item_id.has_value()},
               {"model_version", models->version()},
               {"probabilities", probs_json(a.probs)},
               {"strip_ref", ref}};
  if (item_id) body["review_item_id"] = *item_id;
  if (a.binary_positive) {
    body["binary_positive"] = *a.binary_positive;
    body["binary_disagreement"] = a.binary_disagreement;
  }
  const auto& d = *a.detection;
  json quad = json::array();
  for (const auto& p : d.quad) quad.push_back({p.x, p.y});
  body["detection"] = {{"quad", quad}, {"rotation_deg", d.rotation_deg}, {"confidence", d.confidence}};
  return json_response(200, body);
}

HttpResponse Service::queue(const HttpRequest& req) {
  std::size_t limit = 20;
  if (const auto it = req.query.find("limit"); it != req.query.end()) {
    try {
      const long v = std::stol(it->second);
      if (v < 1) throw std::invalid_argument("limit");
      limit = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      return error_response(400, "BadRequest", "limit must be a positive integer");
    }
  }
  json items = json::array();
  for (const auto& item : learner_->next_queries(limit)) items.push_back(item_json(item));
  const auto s = snapshot();
  return json_response(200, {{"items", items},
                             {"queue_depth", learner_->queue_depth()},
                             {"pool_version", learner_->pool_version()},
                             {"model_version", s ? s->version() : 0}});
}

HttpResponse Service::label(const HttpRequest& req, const std::string& id) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::exception&) {
    return error_response(400, "BadRequest", "body must be JSON {label, labeler}");
  }
  if (!body.is_object() || !body.contains("label") || !body["label"].is_string()) {
    return error_response(400, "BadRequest", "missing label");
  }
  const auto label = parse_class_label(body["label"].get<std::string>());
  if (!label) return error_response(400, "BadRequest", "unknown label " + body["label"].dump());
  const std::string labeler = body.contains("labeler") && body["labeler"].is_string() ? body["labeler"].get<std::string>() : "";

  const std::uint64_t version = learner_->submit_label(id, *label, labeler);
  json out = {{"id", id}, {"pool_version", version}};
  if (learner_->retrain_due()) {
    if (const std::uint64_t mv = run_retrain()) out["retrained_model_version"] = mv;
  }
  return json_response(200, out);
}

std::uint64_t Service::run_retrain() {
  std::unique_lock lock(retrain_mutex_, std::try_to_lock);
  if (!lock.owns_lock()) return 0;
  const auto prev = snapshot();
  if (!prev) throw Error(ErrorCode::InvalidConfig, "no model loaded");
  const LabeledPool pool = learner_->pool();
  ModelSnapshot next = *prev;
  next.multiclass = retrain_step(pool, prev->multiclass, config_.active_learning.train);
  if (!config_.paths.model_dir.empty()) save_model_atomically(next.multiclass, config_.paths.model_dir);
  const std::uint64_t version = next.version();
  install(std::move(next));
  learner_->record_retrain(version);
  return version;
}

HttpResponse Service::retrain() {
  if (!snapshot()) return error_response(503, "ModelNotLoaded", "models are still loading");
  const std::uint64_t version = run_retrain();
  if (version == 0) return error_response(409, "RetrainInProgress", "a retrain is already running");
  return json_response(200, {{"model_version", version}, {"pool_version", learner_->pool_version()}});
}

HttpResponse Service::metrics() const {
  const std::uint64_t total = requests_.load();
  const std::uint64_t fast = fast_path_.load();
  const auto s = snapshot();
  return json_response(200, {{"requests", total},
                             {"fast_path", fast},
                             {"fused", fused_.load()},
                             {"fast_path_fraction", total ? static_cast<double>(fast) / static_cast<double>(total) : 0.0},
                             {"rejected", rejected_.load()},
                             {"errors", errors_.load()},
                             {"segmenter_invocations", segmenter_invocations()},
                             {"queue_depth", learner_->queue_depth()},
                             {"pool_version", learner_->pool_version()},
                             {"model_version", s ? s->version() : 0}});
}

HttpResponse Service::healthz() const {
  const auto s = snapshot();
  if (!s) return json_response(503, {{"status", "loading"}});
  return json_response(200, {{"status", "ok"}, {"model_version", s->version()}});
}

HttpResponse Service::strip_png(const std::string& ref) const {
  std::lock_guard lock(strips_mutex_);
  const auto it = strip_png_.find(ref);
  if (it == strip_png_.end()) return error_response(404, "NotFound", "no stored strip " + ref);
  return {200, "image/png", it->second};
}

namespace {

HttpRequest from_httplib(const httplib::Request& r) {
  HttpRequest req;
  req.method = r.method;
  req.path = r.path;
  for (const auto& [k, v] : r.params) req.query[k] = v;
  for (const auto& [k, v] : r.headers) req.headers[k] = v;
  if (r.is_multipart_form_data()) {
    if (r.has_file("image")) req.body = r.get_file_value("image").content;
  } else {
    req.body = r.body;
  }
  return req;
}

}  // namespace

void Service::setup_server() {
  if (server_) return;
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  const int workers = std::max(1, config_.service.http_workers);
  http.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
  http.set_payload_max_length(config_.service.max_body_bytes);
  if (!config_.service.ui_dir.empty()) http.set_mount_point("/ui", config_.service.ui_dir);
  const auto route = [this](const httplib::Request& r, httplib::Response& res) {
    const HttpResponse out = handle(from_httplib(r));
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  http.Get(R"(/(healthz|queue|metrics))", route);
  http.Get(R"(/strips/[0-9a-f]+\.png)", route);
  http.Post(R"(/(analyze|retrain))", route);
  http.Post(R"(/queue/[A-Za-z0-9_-]+/label)", route);
}

bool Service::serve() {
  setup_server();
  auto& http = server_->http;
  if (config_.service.port == 0) {
    if (http.bind_to_any_port(config_.service.host) <= 0) return false;
    return http.listen_after_bind();
  }
  return http.listen(config_.service.host, config_.service.port);
}

int Service::serve_in_background() {
  setup_server();
  auto& http = server_->http;
  const int port = http.bind_to_any_port(config_.service.host);
  if (port <= 0) throw Error(ErrorCode::Io, "cannot bind " + config_.service.host);
  server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
  http.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!server_) return;
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
}

}  // namespace lfdr
