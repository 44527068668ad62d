#include "astdp/edhmm.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace astdp;

namespace {

PrototypeMemory smallMemory(Index prototypes, Index steps, Index hidden) {
  MemoryParams p;
  p.prototypes = prototypes;
  return PrototypeMemory(p, steps, hidden);
}

}  // namespace

TEST_CASE("combined representation adds rate and time-weighted spike counts") {
  SpikeTensor s(1, 4, 2);
  s.set(0, 0, 0, true);
  s.set(0, 3, 0, true);
  s.set(0, 2, 1, true);
  const PrototypeMemory m = smallMemory(2, 4, 2);
  const Matrix z = combinedRepresentation(s, m);
  const double mix = m.params.temporalMix;
  CHECK(z(0, 0) == doctest::Approx(2.0 + mix * (0.25 + 1.0)));
  CHECK(z(0, 1) == doctest::Approx(1.0 + mix * 0.75));
}

TEST_CASE("match scores follow the exponential distance kernel") {
  std::mt19937_64 rng(1);
  PrototypeMemory m = smallMemory(3, 4, 5);
  m.prototypes = testing::gaussian(rng, 3, 5);
  m.strength << 1.0, 0.5, 2.0;
  m.homeostasis << 1.0, 0.3, 0.9;
  const Matrix z = testing::gaussian(rng, 4, 5);
  const Matrix score = matchScores(z, m);
  for (Index i = 0; i < 4; ++i) {
    for (Index k = 0; k < 3; ++k) {
      const double d = (z.row(i) - m.prototypes.row(k)).norm();
      CHECK(score(i, k) == doctest::Approx(std::exp(-d / m.params.temperature) * m.strength(k) * m.homeostasis(k)));
    }
  }
}

TEST_CASE("memory score combines mismatch, residual and margin") {
  std::mt19937_64 rng(2);
  PrototypeMemory m = smallMemory(3, 4, 2);
  m.prototypes = testing::gaussian(rng, 3, 2);
  const Matrix z = testing::gaussian(rng, 5, 2);
  const Matrix match = matchScores(z, m);
  const MemoryScores s = memoryAnomalyScore(z, match, m);
  for (Index i = 0; i < 5; ++i) {
    Index best = 0;
    match.row(i).maxCoeff(&best);
    CHECK(s.assignment[static_cast<std::size_t>(i)] == best);
    double second = 0.0;
    for (Index k = 0; k < 3; ++k) {
      if (k != best) second = std::max(second, match(i, k));
    }
    const double top = match(i, best);
    const double mismatch = 1.0 - 1.0 / (1.0 + std::exp(-(top - m.params.matchThreshold)));
    const double residual = 1.0 + (z.row(i) - m.prototypes.row(best)).norm();
    const double margin = 1.0 + (top - second) / (top + 1e-8);
    CHECK(s.raw(i) == doctest::Approx(mismatch * residual * margin));
  }
}

TEST_CASE("far-away rows still resolve to the nearest prototype") {
  PrototypeMemory m = smallMemory(2, 4, 1);
  m.prototypes << 0.0, 10.0;
  const Matrix z = Matrix::Constant(1, 1, 5000.0);
  const MemoryScores s = memoryAnomalyScore(z, matchScores(z, m), m);
  CHECK(s.assignment[0] == 1);
  CHECK(std::isfinite(s.raw(0)));
}

TEST_CASE("an update moves each winner towards its batch mean") {
  PrototypeMemory m = smallMemory(2, 4, 2);
  m.prototypes << 0.0, 0.0, 10.0, 10.0;
  const Matrix z = (Matrix(3, 2) << 1.0, 1.0, 3.0, 1.0, 10.0, 12.0).finished();
  updateMemory(m, z, {0, 0, 1});
  const double lr = m.params.learningRate;
  CHECK(m.prototypes(0, 0) == doctest::Approx(lr * 2.0 * 2.0 / (2.0 + 1e-8)));
  CHECK(m.prototypes(1, 1) == doctest::Approx(10.0 + lr * 2.0 / (1.0 + 1e-8)));
  CHECK(m.absorbed(0) == 2.0);
  CHECK(m.homeostasis(0) == 1.0);
}

TEST_CASE("homeostasis decays for idle prototypes but never below the floor") {
  PrototypeMemory m = smallMemory(2, 4, 1);
  m.prototypes << 0.0, 5.0;
  const Matrix z = Matrix::Zero(1, 1);
  for (int k = 0; k < 5000; ++k) updateMemory(m, z, {0});
  CHECK(m.homeostasis(1) == doctest::Approx(m.params.homeoFloor));
  CHECK(m.homeostasis(0) == 1.0);
  CHECK(m.strength.minCoeff() > 0.0);
}

TEST_CASE("count-normalised updates track the running mean exactly") {
  MemoryParams p;
  p.prototypes = 1;
  p.countNormalizedGain = true;
  PrototypeMemory m(p, 4, 2);
  std::mt19937_64 rng(3);
  const Matrix z = testing::gaussian(rng, 40, 2);
  seedPrototypes(m, z.topRows(1));
  for (Index i = 1; i < 40; ++i) updateMemory(m, z.row(i), {0});
  CHECK((m.prototypes.row(0) - z.colwise().mean()).norm() < 1e-12);
}

TEST_CASE("seeding strategies") {
  const Matrix z = (Matrix(5, 1) << 0.0, 0.0, 1.0, 9.0, 4.0).finished();
  PrototypeMemory first = smallMemory(3, 4, 1);
  seedPrototypes(first, z);
  CHECK(first.prototypes.col(0) == Vector((Vector(3) << 0.0, 1.0, 9.0).finished()));
  MemoryParams p;
  p.prototypes = 3;
  p.seeding = PrototypeSeeding::FarthestPoint;
  PrototypeMemory far(p, 4, 1);
  seedPrototypes(far, z);
  CHECK(far.prototypes.col(0) == Vector((Vector(3) << 0.0, 9.0, 4.0).finished()));
  CHECK(far.seeded);
  // Fewer distinct rows than prototypes: cycle through what exists.
  PrototypeMemory cyc = smallMemory(3, 4, 1);
  seedPrototypes(cyc, Matrix::Constant(2, 1, 7.0));
  CHECK(cyc.prototypes.col(0) == Vector::Constant(3, 7.0));
}

TEST_CASE("distortion is the mean squared distance to the nearest prototype") {
  PrototypeMemory m = smallMemory(2, 4, 1);
  m.prototypes << 0.0, 10.0;
  const Matrix z = (Matrix(3, 1) << 1.0, 7.0, 12.0).finished();
  CHECK(distortion(z, m) == doctest::Approx((1.0 + 9.0 + 4.0) / 3.0));
}

TEST_CASE("memory parameters are validated") {
  MemoryParams p;
  p.temporalMix = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.prototypes = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}
