#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfdr/active_learning.hpp"
#include "lfdr/config.hpp"
#include "lfdr/error.hpp"
#include "lfdr/metrics.hpp"
#include "lfdr/pipeline.hpp"
#include "lfdr/service.hpp"
#include "lfdr/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(std::string_view code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
  return 1;
}

lfdr::AppConfig config_or_default(const std::string& path) {
  return path.empty() ? lfdr::AppConfig{} : lfdr::load_config(path);
}

std::string pick(const std::string& flag, const std::string& fallback) { return flag.empty() ? fallback : flag; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lateral flow test reader"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Config file (JSON)");
  app.add_option("--seed", seed, "Random seed");

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::string preset = "paper-shape", out_dir;
  bool cassettes = false;
  gen->add_option("--preset", preset, "paper-shape | balanced | separable | faint");
  gen->add_option("--out", out_dir, "Output directory (default: paths.data_dir)");
  gen->add_flag("--cassettes", cassettes, "Also render full cassette photos");
  gen->add_option("--seed", seed, "Random seed");

  auto* train = app.add_subcommand("train", "Train classifiers and fit the segmenter from a dataset");
  std::string data_dir, model_dir;
  int epochs = 0;
  train->add_option("--data", data_dir, "Dataset directory (default: paths.data_dir)");
  train->add_option("--models", model_dir, "Model output directory (default: paths.model_dir)");
  train->add_option("--epochs", epochs, "Override the configured epoch count");
  train->add_option("--seed", seed, "Random seed");

  auto* eval = app.add_subcommand("evaluate", "Print a metrics report for one split");
  std::string split = "val";
  eval->add_option("--data", data_dir, "Dataset directory");
  eval->add_option("--models", model_dir, "Model directory");
  eval->add_option("--split", split, "train | val | test");

  auto* analyze = app.add_subcommand("analyze", "Analyze one cassette photo");
  std::string image_path;
  analyze->add_option("image", image_path, "PNG or JPEG file")->required();
  analyze->add_option("--models", model_dir, "Model directory");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  int port = -1;
  serve->add_option("--models", model_dir, "Model directory");
  serve->add_option("--data", data_dir, "Dataset whose train split seeds the labeled pool");
  serve->add_option("--port", port, "Listen port (0 picks a free one)");

  CLI11_PARSE(app, argc, argv);

  try {
    lfdr::AppConfig cfg = config_or_default(config_path);
    const std::string data = pick(data_dir, cfg.paths.data_dir);
    const std::string models = pick(model_dir, cfg.paths.model_dir);

    if (*gen) {
      const auto rows = lfdr::generate_dataset(lfdr::dataset_preset(preset, seed), pick(out_dir, cfg.paths.data_dir),
                                               {cassettes});
      std::cout << json{{"samples", rows.size()}, {"out", pick(out_dir, cfg.paths.data_dir)}}.dump() << std::endl;
      return 0;
    }

    if (*train) {
      const auto rows = lfdr::read_manifest((fs::path(data) / "manifest.csv").string());
      lfdr::TrainConfig tc = cfg.active_learning.train;
      tc.seed = seed;
      if (epochs > 0) tc.epochs = epochs;
      const auto trained =
          lfdr::train_models(lfdr::load_split(data, rows, "train"), lfdr::load_split(data, rows, "val"), tc, cfg.segmenter);
      lfdr::save_model_dir(trained, models);
      std::cout << json{{"models", models},
                        {"multiclass_best_epoch", trained.multiclass.params.meta.best_epoch},
                        {"multiclass_val_loss", trained.multiclass.params.meta.final_val_loss},
                        {"binary_best_epoch", trained.binary.params.meta.best_epoch},
                        {"segmenter_band_contrast", trained.segmenter.band_contrast}}
                       .dump()
                << std::endl;
      return 0;
    }

    if (*eval) {
      const auto rows = lfdr::read_manifest((fs::path(data) / "manifest.csv").string());
      const auto strips = lfdr::load_split(data, rows, split);
      if (strips.empty()) return fail("InvalidSplit", "split '" + split + "' has no samples");
      const lfdr::ModelSnapshot snap = lfdr::load_model_dir(models, cfg.segmenter);
      std::vector<lfdr::ClassLabel> preds, labels;
      std::vector<lfdr::ClassProbabilities> probs;
      std::map<lfdr::ClassLabel, std::pair<double, int>> dice;
      const auto* seg = dynamic_cast<const lfdr::BandSegmenter*>(snap.segmenter.get());
      for (const auto& s : strips) {
        probs.push_back(lfdr::predict_multiclass(snap.multiclass, s.strip));
        preds.push_back(probs.back().argmax());
        labels.push_back(s.label);
        if (seg && s.label != lfdr::ClassLabel::Inconclusive) {
          auto& d = dice[s.label];
          d.first += lfdr::dice_coefficient(lfdr::segment_bands(s.strip, s.label, seg->config()), s.masks.at(s.label));
          ++d.second;
        }
      }
      auto report = lfdr::classification_report(preds, labels, &probs);
      for (const auto& [c, d] : dice) report.dice_per_class[c] = d.first / d.second;
      std::cout << lfdr::report_to_json(report) << std::endl;
      return 0;
    }

    if (*analyze) {
      const lfdr::RasterImage img = lfdr::read_image_file(image_path);
      const lfdr::ModelSnapshot snap = lfdr::load_model_dir(models, cfg.segmenter);
      const auto a = lfdr::analyze_raster(img, snap, cfg);
      if (!a.verdict) {
        std::cerr << json{{"error", "QualityRejected"}, {"quality", json::parse(lfdr::quality_to_json(a.quality))}}.dump()
                  << std::endl;
        return 2;
      }
      json out = json::parse(lfdr::verdict_to_json(*a.verdict));
      std::cout << out.dump() << std::endl;
      return 0;
    }

    if (*serve) {
      if (port >= 0) cfg.service.port = port;
      cfg.paths.model_dir = models;
      const bool resume = fs::exists(cfg.paths.journal) && fs::file_size(cfg.paths.journal) > 0;
      if (!cfg.paths.journal.empty()) {
        std::error_code ec;
        fs::create_directories(fs::path(cfg.paths.journal).parent_path(), ec);
      }
      auto learner = resume ? lfdr::ActiveLearner::replay(cfg.active_learning, cfg.thresholds, cfg.paths.journal)
                            : std::make_unique<lfdr::ActiveLearner>(cfg.active_learning, cfg.thresholds, cfg.paths.journal);
      if (!resume && fs::exists(fs::path(data) / "manifest.csv")) {
        const auto rows = lfdr::read_manifest((fs::path(data) / "manifest.csv").string());
        std::vector<lfdr::PoolSample> seeds;
        for (const auto& s : lfdr::load_split(data, rows, "train")) {
          seeds.push_back({lfdr::strip_reference(s.strip), s.label, lfdr::SampleOrigin::Seed, lfdr::extract_features(s.strip)});
        }
        learner->seed(seeds);
      }
      lfdr::Service service(cfg, std::move(learner));
      service.install(lfdr::load_model_dir(models, cfg.segmenter));
      std::cerr << "listening on " << cfg.service.host << ":" << cfg.service.port << std::endl;
      return service.serve() ? 0 : fail("Io", "cannot listen on port " + std::to_string(cfg.service.port));
    }
  } catch (const lfdr::Error& e) {
    std::string code(lfdr::error_code_name(e.code()));
    std::string message = e.what();
    if (message.rfind("file not found", 0) == 0) code = "FileNotFound";
    return fail(code, message);
  } catch (const std::exception& e) {
    return fail("Internal", e.what());
  }
  return 0;
}
