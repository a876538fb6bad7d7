#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>

#include "lfdr/active_learning.hpp"
#include "lfdr/config.hpp"
#include "lfdr/pipeline.hpp"

namespace lfdr {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  /// Raw body; for /analyze this is the image bytes.
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Inference plus active-learning API. handle() is socket-free; serve() wraps
/// it in an HTTP server.
class Service {
 public:
  Service(AppConfig config, std::unique_ptr<ActiveLearner> learner);
  ~Service();

  /// Installs a model snapshot; /healthz turns 200 after the first call.
  void install(ModelSnapshot snapshot);
  std::shared_ptr<const ModelSnapshot> snapshot() const;

  HttpResponse handle(const HttpRequest& request);

  /// Blocks until stop(). Returns false if the port could not be bound.
  bool serve();
  /// Binds to an ephemeral port and serves on a background thread; returns the
  /// port.
  int serve_in_background();
  void stop();

  ActiveLearner& learner() noexcept { return *learner_; }
  std::uint64_t segmenter_invocations() const;

 private:
  HttpResponse analyze(const HttpRequest& req);
  HttpResponse queue(const HttpRequest& req);
  HttpResponse label(const HttpRequest& req, const std::string& id);
  HttpResponse retrain();
  HttpResponse metrics() const;
  HttpResponse healthz() const;
  HttpResponse strip_png(const std::string& ref) const;
  bool authorized(const HttpRequest& req) const;
  void setup_server();
  /// Returns the new model version, or 0 when a retrain was already running.
  std::uint64_t run_retrain();

  struct Server;

  AppConfig config_;
  std::unique_ptr<ActiveLearner> learner_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const ModelSnapshot> snapshot_;
  std::mutex retrain_mutex_;
  std::counting_semaphore<1024> compute_;

  mutable std::mutex strips_mutex_;
  std::map<std::string, std::string> strip_png_;

  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> fast_path_{0};
  std::atomic<std::uint64_t> fused_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::atomic<std::uint64_t> errors_{0};

  std::unique_ptr<Server> server_;
};

}  // namespace lfdr
