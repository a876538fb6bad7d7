#include "lfdr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

constexpr int kModelSchemaVersion = 1;
constexpr int kCols = kFeatureCount + 1;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int target_of(ModelKind kind, ClassLabel label) {
  return kind == ModelKind::Binary ? static_cast<int>(to_binary(label)) : code(label);
}

int output_count(ModelKind kind) { return kind == ModelKind::Binary ? 1 : kNumClasses; }

Eigen::VectorXd augmented(const ModelParams& params, const FeatureVector& f) {
  Eigen::VectorXd x(kCols);
  for (int j = 0; j < kFeatureCount; ++j) x(j) = (f[j] - params.feature_mean[j]) / params.feature_scale[j];
  x(kFeatureCount) = 1.0;
  return x;
}

void check_shape(const ModelParams& params, ModelKind kind) {
  if (params.kind != kind || params.weights.rows() != output_count(kind) || params.weights.cols() != kCols ||
      params.feature_mean.size() != kFeatureCount || params.feature_scale.size() != kFeatureCount) {
    throw Error(ErrorCode::ShapeMismatch, kind == ModelKind::Binary ? "params are not a binary model"
                                                                     : "params are not a 5-class model");
  }
}

void validate_dataset(ModelKind kind, const LabeledFeatures& train) {
  if (train.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (train.x.size() != train.y.size()) throw Error(ErrorCode::LengthMismatch, "features and labels differ in length");
  std::set<int> targets;
  for (ClassLabel c : train.y) targets.insert(target_of(kind, c));
  if (targets.size() < 2) throw Error(ErrorCode::SingleClassDataset, "training set holds a single class");
}

void fit_standardizer(const LabeledFeatures& train, ModelParams& params) {
  const double n = static_cast<double>(train.size());
  params.feature_mean.assign(kFeatureCount, 0.0);
  params.feature_scale.assign(kFeatureCount, 1.0);
  for (int j = 0; j < kFeatureCount; ++j) {
    double s = 0.0;
    for (const auto& f : train.x) s += f[j];
    const double mean = s / n;
    double sq = 0.0;
    for (const auto& f : train.x) sq += (f[j] - mean) * (f[j] - mean);
    const double sd = std::sqrt(sq / n);
    params.feature_mean[j] = mean;
    params.feature_scale[j] = sd > 1e-9 ? sd : 1.0;
  }
}

std::vector<double> sample_weights(ModelKind kind, const LabeledFeatures& data, bool class_weighting) {
  std::vector<double> w(data.size(), 1.0);
  if (!class_weighting || data.size() == 0) return w;
  std::vector<double> counts(kNumClasses, 0.0);
  for (ClassLabel c : data.y) counts[target_of(kind, c)] += 1.0;
  const double present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  for (std::size_t i = 0; i < data.size(); ++i) {
    w[i] = static_cast<double>(data.size()) / (present * counts[target_of(kind, data.y[i])]);
  }
  return w;
}

Eigen::MatrixXd design_matrix(const ModelParams& params, const LabeledFeatures& data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), kCols);
  for (std::size_t i = 0; i < data.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = augmented(params, data.x[i]).transpose();
  return x;
}

std::vector<int> targets(ModelKind kind, const LabeledFeatures& data) {
  std::vector<int> t;
  t.reserve(data.size());
  for (ClassLabel c : data.y) t.push_back(target_of(kind, c));
  return t;
}

double validation_loss(const ModelParams& params, const LabeledFeatures& val) {
  const TrainingProblem problem(params.kind, design_matrix(params, val), targets(params.kind, val),
                                std::vector<double>(val.size(), 1.0), 0.0);
  return problem.value(params.weights);
}

TrainResult train(ModelKind kind, const LabeledFeatures& train_set, const LabeledFeatures& val,
                  const TrainConfig& config, const ModelParams* warm_start) {
  validate_dataset(kind, train_set);
  if (config.epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");

  ModelParams params = ModelParams::zeros(kind);
  if (warm_start) {
    check_shape(*warm_start, kind);
    params = *warm_start;
  } else {
    fit_standardizer(train_set, params);
  }

  const Eigen::MatrixXd design = design_matrix(params, train_set);
  const std::vector<int> t = targets(kind, train_set);
  const std::vector<double> w = sample_weights(kind, train_set, config.class_weighting);
  const TrainingProblem full(kind, design, t, w, config.l2);
  const std::size_t n = train_set.size();
  const bool mini = config.batch_size > 0 && static_cast<std::size_t>(config.batch_size) < n;
  // Full batch is capped at 1/L so each epoch is a guaranteed descent step.
  const double step = mini ? config.learning_rate : std::min(config.learning_rate, 1.0 / full.lipschitz_bound());
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  ModelParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (!mini) {
      params.weights -= step * full.evaluate(params.weights).gradient;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
        Eigen::MatrixXd xb(static_cast<Eigen::Index>(stop - start), kCols);
        std::vector<int> tb;
        std::vector<double> wb;
        for (std::size_t k = start; k < stop; ++k) {
          xb.row(static_cast<Eigen::Index>(k - start)) = design.row(static_cast<Eigen::Index>(order[k]));
          tb.push_back(t[order[k]]);
          wb.push_back(w[order[k]]);
        }
        const TrainingProblem batch(kind, std::move(xb), std::move(tb), std::move(wb), config.l2);
        params.weights -= step * batch.evaluate(params.weights).gradient;
      }
    }
    const double train_loss = full.value(params.weights);
    result.curves.train_loss.push_back(train_loss);
    if (val.size() > 0) {
      const double v = validation_loss(params, val);
      result.curves.val_loss.push_back(v);
      if (v < best_val) {
        best_val = v;
        best = params;
        best.meta.best_epoch = epoch;
        best.meta.final_train_loss = train_loss;
        best.meta.final_val_loss = v;
      }
    }
  }
  if (val.size() == 0) {
    best = params;
    best.meta.best_epoch = config.epochs;
    best.meta.final_train_loss = result.curves.train_loss.back();
    best.meta.final_val_loss = 0.0;
  }
  best.meta.epochs = config.epochs;
  best.meta.seed = config.seed;
  best.meta.learning_rate = step;
  best.meta.model_version = warm_start ? warm_start->meta.model_version + 1 : 1;
  result.params = std::move(best);
  return result;
}

}  // namespace

ClassLabel ClassProbabilities::argmax() const noexcept {
  return static_cast<ClassLabel>(std::max_element(p.begin(), p.end()) - p.begin());
}

double ClassProbabilities::max() const noexcept { return *std::max_element(p.begin(), p.end()); }

ModelParams ModelParams::zeros(ModelKind kind) {
  ModelParams m;
  m.kind = kind;
  m.weights = Eigen::MatrixXd::Zero(output_count(kind), kCols);
  m.feature_mean.assign(kFeatureCount, 0.0);
  m.feature_scale.assign(kFeatureCount, 1.0);
  return m;
}

bool ModelParams::operator==(const ModelParams& o) const {
  return kind == o.kind && weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
         weights == o.weights && feature_mean == o.feature_mean && feature_scale == o.feature_scale && meta == o.meta;
}

TrainingProblem::TrainingProblem(ModelKind kind, Eigen::MatrixXd design, std::vector<int> targets,
                                 std::vector<double> sample_weights, double l2)
    : kind_(kind), design_(std::move(design)), targets_(std::move(targets)), weights_(std::move(sample_weights)), l2_(l2) {
  if (targets_.size() != static_cast<std::size_t>(design_.rows()) || weights_.size() != targets_.size()) {
    throw Error(ErrorCode::LengthMismatch, "design, targets and weights differ in length");
  }
  weight_sum_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

TrainingProblem::Evaluation TrainingProblem::evaluate(const Eigen::MatrixXd& w) const {
  const Eigen::Index cols = design_.cols();
  Evaluation ev;
  ev.gradient = Eigen::MatrixXd::Zero(w.rows(), cols);
  if (design_.rows() == 0 || weight_sum_ <= 0.0) return ev;

  const Eigen::MatrixXd scores = design_ * w.transpose();  // n x k
  Eigen::MatrixXd residual(scores.rows(), scores.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double wi = weights_[static_cast<std::size_t>(i)] / weight_sum_;
    const int y = targets_[static_cast<std::size_t>(i)];
    if (kind_ == ModelKind::Binary) {
      const double z = scores(i, 0);
      loss += wi * (softplus(z) - y * z);
      residual(i, 0) = wi * (sigmoid(z) - y);
    } else {
      const double m = scores.row(i).maxCoeff();
      double denom = 0.0;
      for (Eigen::Index c = 0; c < scores.cols(); ++c) denom += std::exp(scores(i, c) - m);
      const double lse = m + std::log(denom);
      loss += wi * (lse - scores(i, y));
      for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        residual(i, c) = wi * (std::exp(scores(i, c) - lse) - (c == y ? 1.0 : 0.0));
      }
    }
  }
  ev.gradient = residual.transpose() * design_;
  // L2 on everything but the bias column.
  const auto body = w.leftCols(cols - 1);
  ev.gradient.leftCols(cols - 1) += l2_ * body;
  ev.value = loss + 0.5 * l2_ * body.squaredNorm();
  return ev;
}

double TrainingProblem::lipschitz_bound() const {
  const Eigen::Index cols = design_.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(cols, cols);
  for (Eigen::Index i = 0; i < design_.rows(); ++i) {
    gram.noalias() += (weights_[static_cast<std::size_t>(i)] / weight_sum_) * design_.row(i).transpose() * design_.row(i);
  }
  // Power iteration; the 5% margin covers its underestimate.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(cols).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 300; ++it) {
    const Eigen::VectorXd gv = gram * v;
    const double norm = gv.norm();
    if (norm == 0.0) break;
    lambda = norm;
    v = gv / norm;
  }
  const double curvature = kind_ == ModelKind::Binary ? 0.25 : 0.5;
  return 1.05 * curvature * lambda + l2_;
}

TrainingProblem make_problem(const ModelParams& params, const LabeledFeatures& data, const TrainConfig& config) {
  return TrainingProblem(params.kind, design_matrix(params, data), targets(params.kind, data),
                         sample_weights(params.kind, data, config.class_weighting), config.l2);
}

double training_objective(const ModelParams& params, const LabeledFeatures& data, const TrainConfig& config) {
  return make_problem(params, data, config).value(params.weights);
}

TrainResult train_multiclass(const LabeledFeatures& train_set, const LabeledFeatures& val, const TrainConfig& config,
                             const ModelParams* warm_start) {
  return train(ModelKind::Multiclass, train_set, val, config, warm_start);
}

TrainResult train_binary(const LabeledFeatures& train_set, const LabeledFeatures& val, const TrainConfig& config,
                         const ModelParams* warm_start) {
  return train(ModelKind::Binary, train_set, val, config, warm_start);
}

ClassProbabilities predict_multiclass(const ModelParams& params, const FeatureVector& features) {
  check_shape(params, ModelKind::Multiclass);
  const Eigen::VectorXd z = params.weights * augmented(params, features);
  const double m = z.maxCoeff();
  ClassProbabilities out;
  double denom = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    out.p[c] = std::exp(z(c) - m);
    denom += out.p[c];
  }
  for (double& v : out.p) v /= denom;
  return out;
}

ClassProbabilities predict_multiclass(const ModelParams& params, const StripImage& strip) {
  check_shape(params, ModelKind::Multiclass);
  return predict_multiclass(params, extract_features(strip));
}

double predict_binary(const ModelParams& params, const FeatureVector& features) {
  check_shape(params, ModelKind::Binary);
  return sigmoid(params.weights.row(0).dot(augmented(params, features)));
}

double predict_binary(const ModelParams& params, const StripImage& strip) {
  check_shape(params, ModelKind::Binary);
  return predict_binary(params, extract_features(strip));
}

std::string model_to_json(const ModelParams& params) {
  nlohmann::json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = params.kind == ModelKind::Binary ? "binary" : "multiclass";
  j["rows"] = params.weights.rows();
  j["cols"] = params.weights.cols();
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < params.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.weights.cols(); ++c) flat.push_back(params.weights(r, c));
  }
  j["weights"] = flat;
  j["feature_mean"] = params.feature_mean;
  j["feature_scale"] = params.feature_scale;
  const auto& m = params.meta;
  j["training_meta"] = {{"epochs", m.epochs},
                        {"seed", m.seed},
                        {"best_epoch", m.best_epoch},
                        {"learning_rate", m.learning_rate},
                        {"final_train_loss", m.final_train_loss},
                        {"final_val_loss", m.final_val_loss},
                        {"model_version", m.model_version},
                        {"pool_version", m.pool_version}};
  return j.dump(1);
}

ModelParams model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw Error(ErrorCode::SchemaVersion, "unsupported model schema_version " + j.at("schema_version").dump());
    }
    ModelParams p;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "binary" && kind != "multiclass") throw Error(ErrorCode::ShapeMismatch, "unknown model kind " + kind);
    p.kind = kind == "binary" ? ModelKind::Binary : ModelKind::Multiclass;
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto flat = j.at("weights").get<std::vector<double>>();
    if (rows != output_count(p.kind) || cols != kCols || flat.size() != static_cast<std::size_t>(rows * cols)) {
      throw Error(ErrorCode::ShapeMismatch, "model weight matrix has the wrong shape");
    }
    p.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) p.weights(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
    p.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    p.feature_scale = j.at("feature_scale").get<std::vector<double>>();
    const auto& m = j.at("training_meta");
    p.meta.epochs = m.at("epochs").get<int>();
    p.meta.seed = m.at("seed").get<std::uint64_t>();
    p.meta.best_epoch = m.at("best_epoch").get<int>();
    p.meta.learning_rate = m.at("learning_rate").get<double>();
    p.meta.final_train_loss = m.at("final_train_loss").get<double>();
    p.meta.final_val_loss = m.at("final_val_loss").get<double>();
    p.meta.model_version = m.at("model_version").get<std::uint64_t>();
    p.meta.pool_version = m.at("pool_version").get<std::uint64_t>();
    check_shape(p, p.kind);
    if (!p.weights.allFinite()) throw Error(ErrorCode::ShapeMismatch, "model weights are not finite");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaVersion, std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << model_to_json(params) << '\n';
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

void write_loss_csv(const LossCurves& curves, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "epoch,train_loss,val_loss\n";
  out.precision(17);
  for (std::size_t e = 0; e < curves.train_loss.size(); ++e) {
    out << e + 1 << ',' << curves.train_loss[e] << ',';
    if (e < curves.val_loss.size()) out << curves.val_loss[e];
    out << '\n';
  }
}

}  // namespace lfdr
