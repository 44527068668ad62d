#include "astdp/metrics.hpp"

#include <doctest.h>

#include <random>

using namespace astdp;

namespace {

double pairwiseAuroc(const std::vector<int>& y, const Vector& s) {
  double hits = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      hits += s(Index(i)) > s(Index(j)) ? 1.0 : s(Index(i)) == s(Index(j)) ? 0.5 : 0.0;
    }
  }
  return hits / pairs;
}

}  // namespace

TEST_CASE("AUROC equals pairwise concordance with ties counted half") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 25)(rng);
    std::vector<int> y(static_cast<std::size_t>(n));
    Vector s(n);
    for (int i = 0; i < n; ++i) {
      y[std::size_t(i)] = std::bernoulli_distribution(0.4)(rng);
      s(i) = std::uniform_int_distribution<int>(0, 4)(rng);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(auroc(y, s) == doctest::Approx(pairwiseAuroc(y, s)).epsilon(1e-14));
  }
}

TEST_CASE("AUROC and AUPRC edge cases") {
  const std::vector<int> y{1, 0, 1, 0};
  CHECK(auroc(y, (Vector(4) << 0.9, 0.1, 0.8, 0.2).finished()) == 1.0);
  CHECK(auroc(y, (Vector(4) << 0.1, 0.9, 0.2, 0.8).finished()) == 0.0);
  CHECK(auroc(y, Vector::Constant(4, 0.3)) == 0.5);
  CHECK(auprc(y, (Vector(4) << 0.9, 0.1, 0.8, 0.2).finished()) == 1.0);
  CHECK(auprc(y, Vector::Constant(4, 0.3)) == 0.5);
  // Ranked labels 1,0,0,1: AP = (1/2)(1/1) + (1/2)(2/4).
  CHECK(auprc(y, (Vector(4) << 0.9, 0.7, 0.5, 0.8).finished()) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auroc({1, 1}, Vector::Ones(2)), Error);
  CHECK_THROWS_AS(auprc({0, 0}, Vector::Ones(2)), Error);
  CHECK_THROWS_AS(auroc({1, 2}, Vector::Ones(2)), Error);
  CHECK_THROWS_AS(auroc({1, 0, 1}, Vector::Ones(2)), Error);
}

TEST_CASE("F1 at a threshold from the confusion counts") {
  const std::vector<int> y{1, 1, 0, 0, 0, 1};
  const Vector s = (Vector(6) << 0.9, 0.4, 0.6, 0.1, 0.2, 0.5).finished();
  const F1Result r = macroF1AtThreshold(y, s, 0.5);
  CHECK(r.confusion.tp == 2);
  CHECK(r.confusion.fn == 1);
  CHECK(r.confusion.fp == 1);
  CHECK(r.confusion.tn == 2);
  CHECK(r.f1Anomaly == doctest::Approx(2.0 / 3.0));
  CHECK(r.f1Normal == doctest::Approx(2.0 / 3.0));
  CHECK(r.macroF1 == doctest::Approx(2.0 / 3.0));
  const F1Result none = macroF1AtThreshold(y, s, 2.0);
  CHECK(none.f1Anomaly == 0.0);
}

TEST_CASE("threshold selection maximises anomaly F1 over candidate cut points") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 20)(rng);
    std::vector<int> y(static_cast<std::size_t>(n));
    Vector s(n);
    for (int i = 0; i < n; ++i) {
      y[std::size_t(i)] = std::bernoulli_distribution(0.3)(rng);
      s(i) = std::uniform_int_distribution<int>(0, 10)(rng) / 10.0;
    }
    y[0] = 1;
    y[1] = 0;
    s(0) = 0.0;
    s(1) = 1.0;
    const double tau = selectThreshold(y, s);
    const double best = macroF1AtThreshold(y, s, tau).f1Anomaly;
    for (double t = -0.05; t <= 1.05; t += 0.01) CHECK(macroF1AtThreshold(y, s, t).f1Anomaly <= best + 1e-12);
  }
  CHECK(selectThreshold({1, 0}, Vector::Constant(2, 0.7)) == 0.5);
}

TEST_CASE("evaluation gathers the requested rows") {
  const std::vector<int> y{0, 1, 0, 1};
  const Vector s = (Vector(4) << 0.1, 0.9, 0.3, 0.2).finished();
  const auto [gy, gs] = gather(y, s, {3, 0});
  CHECK(gy == std::vector<int>{1, 0});
  CHECK(gs == Vector((Vector(2) << 0.2, 0.1).finished()));
  const EvalReport r = evaluate(y, s, 0.5, 0.1);
  CHECK(r.auroc == 0.75);
  CHECK(r.confusion.tp == 1);
  CHECK(r.spikeDensity == 0.1);
}
