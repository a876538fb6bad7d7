#include "lfdr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon); }

double ratio_or_zero(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double dice_coefficient(const BinaryMask& x, const BinaryMask& y) {
  if (x.width() != y.width() || x.height() != y.height()) {
    throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
  }
  const auto& a = x.bits();
  const auto& b = y.bits();
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    inter += a[i] & b[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double dice_loss(const BinaryMask& x, const BinaryMask& y) { return 1.0 - dice_coefficient(x, y); }

double binary_cross_entropy(const std::vector<double>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    // Clamp the complement itself: 1 - (1 - eps) is not eps in doubles.
    sum += labels[i] != 0 ? std::log(clamp_prob(preds[i])) : std::log(clamp_prob(1.0 - preds[i]));
  }
  return -sum / static_cast<double>(preds.size());
}

double categorical_cross_entropy(const std::vector<ClassProbabilities>& preds, const std::vector<ClassLabel>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::log(clamp_prob(preds[i][labels[i]]));
  return -sum / static_cast<double>(preds.size());
}

MetricsReport classification_report(const std::vector<ClassLabel>& preds, const std::vector<ClassLabel>& labels,
                                    const std::vector<ClassProbabilities>* probs) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  MetricsReport r;
  r.samples = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i) ++r.confusion[code(labels[i])][code(preds[i])];

  std::size_t correct = 0, present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      predicted += r.confusion[k][c];
      actual += r.confusion[c][k];
    }
    const std::size_t tp = r.confusion[c][c];
    correct += tp;
    auto& s = r.per_class[c];
    s.support = actual;
    s.precision = ratio_or_zero(tp, predicted);
    s.recall = ratio_or_zero(tp, actual);
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    if (predicted + actual > 0) {
      ++present;
      r.precision_mean += s.precision;
      r.recall_mean += s.recall;
      r.f1_mean += s.f1;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.samples);
  r.precision_mean /= static_cast<double>(present);
  r.recall_mean /= static_cast<double>(present);
  r.f1_mean /= static_cast<double>(present);
  if (probs) r.cross_entropy = categorical_cross_entropy(*probs, labels);
  return r;
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["samples"] = r.samples;
  j["accuracy"] = r.accuracy;
  j["precision_mean"] = r.precision_mean;
  j["recall_mean"] = r.recall_mean;
  j["f1_mean"] = r.f1_mean;
  j["cross_entropy"] = r.cross_entropy ? nlohmann::json(*r.cross_entropy) : nlohmann::json(nullptr);
  j["probability_epsilon"] = kProbabilityEpsilon;
  for (ClassLabel c : kAllClasses) {
    const auto& s = r.per_class[code(c)];
    j["per_class"][std::string(to_string(c))] = {
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  j["confusion"] = r.confusion;
  if (!r.dice_per_class.empty()) {
    for (const auto& [c, d] : r.dice_per_class) j["dice_per_class"][std::string(to_string(c))] = d;
  }
  return j.dump(2);
}

std::pair<double, double> sensitivity_specificity(const std::vector<Outcome>& preds,
                                                  const std::vector<ClassLabel>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (is_positive(labels[i])) {
      preds[i] == Outcome::Positive ? ++tp : ++fn;
    } else if (labels[i] == ClassLabel::Negative) {
      preds[i] == Outcome::Negative ? ++tn : ++fp;
    }
  }
  if (tp + fn == 0) throw Error(ErrorCode::EmptyDenominator, "no positive ground truth");
  if (tn + fp == 0) throw Error(ErrorCode::EmptyDenominator, "no negative ground truth");
  return {static_cast<double>(tp) / static_cast<double>(tp + fn), static_cast<double>(tn) / static_cast<double>(tn + fp)};
}

}  // namespace lfdr
