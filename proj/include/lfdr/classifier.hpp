#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfdr/features.hpp"
#include "lfdr/labels.hpp"

namespace lfdr {

struct ClassProbabilities {
  std::array<double, kNumClasses> p{};

  double operator[](ClassLabel c) const noexcept { return p[code(c)]; }
  ClassLabel argmax() const noexcept;
  double max() const noexcept;
  bool operator==(const ClassProbabilities&) const = default;
};

enum class ModelKind { Multiclass, Binary };

struct TrainingMeta {
  int epochs = 0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double learning_rate = 0.0;  // step size actually used
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  std::uint64_t model_version = 1;
  std::uint64_t pool_version = 0;

  bool operator==(const TrainingMeta&) const = default;
};

/// Linear model over standardized features. `weights` has one row per output
/// (5 for multiclass softmax, 1 for the binary sigmoid) and kFeatureCount + 1
/// columns, the last being the bias.
struct ModelParams {
  ModelKind kind = ModelKind::Multiclass;
  Eigen::MatrixXd weights;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  TrainingMeta meta;

  static ModelParams zeros(ModelKind kind);
  int outputs() const noexcept { return static_cast<int>(weights.rows()); }
  bool operator==(const ModelParams& o) const;
};

struct LabeledFeatures {
  std::vector<FeatureVector> x;
  std::vector<ClassLabel> y;

  std::size_t size() const noexcept { return x.size(); }
  void add(const FeatureVector& f, ClassLabel label) {
    x.push_back(f);
    y.push_back(label);
  }
};

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  bool class_weighting = true;
  /// 0 (or >= the sample count) means full batch, where the step is capped at
  /// the inverse smoothness bound.
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct LossCurves {
  /// Training objective (weighted cross-entropy plus L2) after each epoch.
  std::vector<double> train_loss;
  /// Unweighted mean cross-entropy on the validation set after each epoch;
  /// empty when no validation set was given.
  std::vector<double> val_loss;
};

struct TrainResult {
  ModelParams params;
  LossCurves curves;
};

/// Weighted cross-entropy objective over an augmented design matrix
/// (standardized features plus a trailing 1).
class TrainingProblem {
 public:
  TrainingProblem(ModelKind kind, Eigen::MatrixXd design, std::vector<int> targets, std::vector<double> sample_weights,
                  double l2);

  struct Evaluation {
    double value = 0.0;
    Eigen::MatrixXd gradient;
  };

  Evaluation evaluate(const Eigen::MatrixXd& weights) const;
  double value(const Eigen::MatrixXd& weights) const { return evaluate(weights).value; }
  /// Upper bound on the Hessian's spectral norm; 1/L is a safe step size.
  double lipschitz_bound() const;
  std::size_t samples() const noexcept { return static_cast<std::size_t>(design_.rows()); }

 private:
  ModelKind kind_;
  Eigen::MatrixXd design_;
  std::vector<int> targets_;
  std::vector<double> weights_;
  double weight_sum_ = 0.0;
  double l2_;
};

/// Builds the problem the trainer minimizes for `data` in the feature space
/// of `params`.
TrainingProblem make_problem(const ModelParams& params, const LabeledFeatures& data, const TrainConfig& config);
double training_objective(const ModelParams& params, const LabeledFeatures& data, const TrainConfig& config);

/// Softmax regression trained by gradient descent; returns the epoch with the
/// lowest validation loss (the last epoch when `val` is empty).
TrainResult train_multiclass(const LabeledFeatures& train, const LabeledFeatures& val, const TrainConfig& config,
                             const ModelParams* warm_start = nullptr);

/// Logistic regression on Positive vs Unknown.
TrainResult train_binary(const LabeledFeatures& train, const LabeledFeatures& val, const TrainConfig& config,
                         const ModelParams* warm_start = nullptr);

ClassProbabilities predict_multiclass(const ModelParams& params, const FeatureVector& features);
ClassProbabilities predict_multiclass(const ModelParams& params, const StripImage& strip);
double predict_binary(const ModelParams& params, const FeatureVector& features);
double predict_binary(const ModelParams& params, const StripImage& strip);

std::string model_to_json(const ModelParams& params);
ModelParams model_from_json(const std::string& text);
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

void write_loss_csv(const LossCurves& curves, const std::string& path);

}  // namespace lfdr
