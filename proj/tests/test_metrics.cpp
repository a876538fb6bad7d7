#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>
#include <random>

#include "lfdr/error.hpp"
#include "lfdr/metrics.hpp"
#include "oracles.hpp"

using namespace lfdr;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  std::bernoulli_distribution on(density);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, on(rng));
  }
  return m;
}

Big big_clamp(double p) {
  const Big eps(kProbabilityEpsilon);
  Big v(p);
  if (v < eps) v = eps;
  if (v > Big(1) - eps) v = Big(1) - eps;
  return v;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected lfdr::Error");
  return ErrorCode::Io;
}

ClassLabel L(int c) { return class_from_code(c); }

}  // namespace

TEST_CASE("dice: fixed cases") {
  BinaryMask x(4, 2), y(4, 2);
  CHECK(dice_coefficient(x, y) == 1.0);
  CHECK(dice_loss(x, y) == 0.0);
  for (int i = 0; i < 4; ++i) x.set(i, 0);
  y.set(0, 0), y.set(1, 0), y.set(0, 1), y.set(1, 1);
  CHECK(dice_coefficient(x, y) == 0.5);
  CHECK(dice_coefficient(x, x) == 1.0);

  BinaryMask disjoint(4, 2);
  disjoint.set(3, 1);
  CHECK(dice_coefficient(x, disjoint) == 0.0);
  CHECK(dice_loss(x, disjoint) == 1.0);
  CHECK(dice_coefficient(x, BinaryMask(4, 2)) == 0.0);

  CHECK(code_of([&] { dice_coefficient(x, BinaryMask(2, 4)); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { dice_loss(x, BinaryMask(4, 3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("dice: random strip-sized masks against pixel counting") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double dx = trial % 10 == 0 ? 0.0 : density(rng);
    const double dy = trial % 15 == 0 ? 0.0 : density(rng);
    const BinaryMask a = random_mask(rng, kStripWidth, kStripHeight, dx);
    const BinaryMask b = random_mask(rng, kStripWidth, kStripHeight, dy);
    const double d = dice_coefficient(a, b);
    CHECK(d == oracle::dice_by_counting(a, b));
    CHECK(d == dice_coefficient(b, a));
    CHECK(dice_coefficient(a, a) == 1.0);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(dice_loss(a, b) + d == 1.0);
  }
}

TEST_CASE("cross-entropy: analytic values and the clamp floor") {
  const std::vector<ClassProbabilities> uniform(7, ClassProbabilities{{0.2, 0.2, 0.2, 0.2, 0.2}});
  const std::vector<ClassLabel> labels{L(0), L(1), L(2), L(3), L(4), L(0), L(3)};
  CHECK(std::abs(categorical_cross_entropy(uniform, labels) - 1.6094379124341003) <= 1e-9);
  CHECK(std::abs(binary_cross_entropy({0.5, 0.5, 0.5}, {1, 0, 1}) - 0.6931471805599453) <= 1e-9);

  const double floor = binary_cross_entropy({1.0, 0.0}, {1, 0});
  CHECK(floor <= 2.8e-11);
  CHECK(floor == doctest::Approx(-std::log1p(-kProbabilityEpsilon)).epsilon(1e-6));
  const std::vector<ClassProbabilities> onehot{ClassProbabilities{{0, 0, 1, 0, 0}}};
  CHECK(categorical_cross_entropy(onehot, {L(2)}) <= 2.8e-11);
  // A zero probability on the true class is finite thanks to the clamp.
  CHECK(categorical_cross_entropy(onehot, {L(1)}) == doctest::Approx(-std::log(kProbabilityEpsilon)));
  CHECK(binary_cross_entropy({0.0}, {1}) == doctest::Approx(-std::log(kProbabilityEpsilon)));
  // Confident wrong answers near p = 1 hit the floor on the complement exactly.
  for (double p : {1.0, 1.0 - 1e-13, 1.0 - 1e-11}) {
    const Big ref = -boost::multiprecision::log(Big(1) - big_clamp(p));
    CHECK(std::abs(binary_cross_entropy({p}, {0}) - static_cast<double>(ref)) <= 1e-12);
  }

  CHECK(code_of([] { binary_cross_entropy({0.5}, {1, 0}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { binary_cross_entropy({}, {}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([] { categorical_cross_entropy({}, {}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { categorical_cross_entropy(uniform, {L(0)}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("cross-entropy: random cases against 50-digit arithmetic") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> bp;
    std::vector<int> by;
    std::vector<ClassProbabilities> cp;
    std::vector<ClassLabel> cy;
    Big bsum = 0, csum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double p = u(rng);
      if (trial % 7 == 0 && i == 0) p = 0.0;
      const int y = static_cast<int>(rng() % 2);
      bp.push_back(p);
      by.push_back(y);
      bsum += y ? boost::multiprecision::log(big_clamp(p)) : boost::multiprecision::log(Big(1) - big_clamp(p));

      ClassProbabilities q;
      double total = 0.0;
      for (double& v : q.p) total += (v = u(rng) + 1e-3);
      for (double& v : q.p) v /= total;
      const ClassLabel c = L(static_cast<int>(rng() % kNumClasses));
      cp.push_back(q);
      cy.push_back(c);
      csum += boost::multiprecision::log(big_clamp(q[c]));
    }
    const double bref = static_cast<double>(-bsum / n);
    const double cref = static_cast<double>(-csum / n);
    CHECK(std::abs(binary_cross_entropy(bp, by) - bref) <= 1e-12);
    CHECK(std::abs(categorical_cross_entropy(cp, cy) - cref) <= 1e-12);
  }
}

TEST_CASE("classification report: hand-computed example") {
  const auto IGG = ClassLabel::PositiveIGG, NEG = ClassLabel::Negative;
  const MetricsReport r = classification_report({IGG, IGG, NEG, NEG}, {IGG, NEG, NEG, NEG});
  CHECK(r.accuracy == 0.75);
  CHECK(r.per_class[code(IGG)].precision == 0.5);
  CHECK(r.per_class[code(IGG)].recall == 1.0);
  CHECK(r.per_class[code(IGG)].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[code(NEG)].precision == 1.0);
  CHECK(r.per_class[code(NEG)].recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[code(NEG)].f1 == doctest::Approx(0.8));
  CHECK(r.per_class[code(NEG)].support == 3);
  CHECK(r.f1_mean == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
  CHECK(r.confusion[code(NEG)][code(IGG)] == 1);
  CHECK_FALSE(r.cross_entropy.has_value());

  const MetricsReport perfect = classification_report({IGG, NEG}, {IGG, NEG});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1_mean == 1.0);

  const std::vector<ClassProbabilities> probs(4, ClassProbabilities{{0.2, 0.2, 0.2, 0.2, 0.2}});
  const MetricsReport with = classification_report({IGG, IGG, NEG, NEG}, {IGG, NEG, NEG, NEG}, &probs);
  REQUIRE(with.cross_entropy.has_value());
  CHECK(*with.cross_entropy == doctest::Approx(std::log(5.0)));

  CHECK(code_of([] { classification_report({}, {}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { classification_report({IGG}, {IGG, NEG}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("classification report: random pairs against counting") {
  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ClassLabel> preds, labels;
    for (int i = 0; i < 500; ++i) {
      labels.push_back(L(static_cast<int>(rng() % kNumClasses)));
      preds.push_back(rng() % 3 == 0 ? labels.back() : L(static_cast<int>(rng() % (kNumClasses - trial % 2))));
    }
    const MetricsReport r = classification_report(preds, labels);

    std::size_t total = 0, trace = 0;
    double f1_sum = 0.0;
    int present = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = code(preds[i]) == c, t = code(labels[i]) == c;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
      }
      const double precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
      const double recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
      const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
      CHECK(r.per_class[c].precision == precision);
      CHECK(r.per_class[c].recall == recall);
      CHECK(r.per_class[c].f1 == f1);
      CHECK(r.per_class[c].support == tp + fn);
      std::size_t row = 0;
      for (int k = 0; k < kNumClasses; ++k) row += r.confusion[c][k];
      CHECK(row == r.per_class[c].support);
      total += row;
      trace += r.confusion[c][c];
      if (tp + fp + fn > 0) {
        f1_sum += f1;
        ++present;
      }
    }
    CHECK(total == preds.size());
    CHECK(r.accuracy == static_cast<double>(trace) / total);
    CHECK(r.f1_mean == doctest::Approx(f1_sum / present).epsilon(1e-14));

    // Macro-F1 survives a consistent relabeling.
    std::array<int, kNumClasses> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ClassLabel> pp, pl;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      pp.push_back(L(perm[code(preds[i])]));
      pl.push_back(L(perm[code(labels[i])]));
    }
    const MetricsReport q = classification_report(pp, pl);
    CHECK(q.f1_mean == doctest::Approx(r.f1_mean).epsilon(1e-14));
    CHECK(q.accuracy == r.accuracy);
  }
}

TEST_CASE("sensitivity and specificity") {
  std::vector<Outcome> preds;
  std::vector<ClassLabel> labels;
  auto add = [&](int n, ClassLabel truth, Outcome out) {
    for (int i = 0; i < n; ++i) {
      labels.push_back(truth);
      preds.push_back(out);
    }
  };
  add(84, ClassLabel::PositiveIGM, Outcome::Positive);
  add(16, ClassLabel::PositiveIGG, Outcome::Negative);
  add(87, ClassLabel::Negative, Outcome::Negative);
  add(13, ClassLabel::Negative, Outcome::Positive);
  // Inconclusive ground truth is ignored either way.
  add(5, ClassLabel::Inconclusive, Outcome::Positive);
  const auto [sens, spec] = sensitivity_specificity(preds, labels);
  CHECK(sens == doctest::Approx(0.84).epsilon(1e-15));
  CHECK(spec == doctest::Approx(0.87).epsilon(1e-15));

  // An Inconclusive outcome counts against both rates.
  const auto [s2, p2] = sensitivity_specificity({Outcome::Inconclusive, Outcome::Inconclusive, Outcome::Positive},
                                                {ClassLabel::PositiveIGG, ClassLabel::Negative, ClassLabel::PositiveIGM});
  CHECK(s2 == 0.5);
  CHECK(p2 == 0.0);

  CHECK(code_of([] { sensitivity_specificity({Outcome::Positive}, {ClassLabel::PositiveIGG}); }) ==
        ErrorCode::EmptyDenominator);
  CHECK(code_of([] { sensitivity_specificity({Outcome::Negative}, {ClassLabel::Negative}); }) ==
        ErrorCode::EmptyDenominator);
  CHECK(code_of([] { sensitivity_specificity({}, {ClassLabel::Negative}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("report JSON carries the per-class table") {
  MetricsReport r = classification_report({ClassLabel::Negative, ClassLabel::PositiveIGM},
                                          {ClassLabel::Negative, ClassLabel::PositiveIGG});
  r.dice_per_class[ClassLabel::PositiveIGG] = 0.7;
  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.at("accuracy").get<double>() == 0.5);
  CHECK(j.at("per_class").size() == kNumClasses);
  CHECK(j.at("confusion").size() == kNumClasses);
  CHECK(j.at("cross_entropy").is_null());
  CHECK(j.at("dice_per_class").size() == 1);
}
