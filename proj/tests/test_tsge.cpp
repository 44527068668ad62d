#include "astdp/tsge.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace astdp;

namespace {

TsgeWeights scalarWeights() { return {Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)}; }

}  // namespace

TEST_CASE("one LIF step follows the recurrence by hand") {
  LifParams p;
  p.steps = 4;
  const TsgeWeights w = scalarWeights();
  LifState s = LifState::zeros(1, 1);
  const double drive = 2.0;
  const auto r1 = lifStep(s, Matrix::Constant(1, 1, drive), p, w);
  const double i1 = drive / 4.0, v1 = i1;
  CHECK(s.current(0, 0) == doctest::Approx(i1).epsilon(1e-15));
  CHECK(s.membrane(0, 0) == doctest::Approx(v1).epsilon(1e-15));
  CHECK(r1.spikes(0, 0) == 0.0);
  CHECK(r1.threshold(0, 0) == 1.0);
  const auto r2 = lifStep(s, Matrix::Constant(1, 1, drive), p, w);
  const double i2 = p.alpha() * i1 + drive / 4.0, v2 = p.beta() * v1 + i2;
  CHECK(v2 >= 1.0);
  CHECK(r2.spikes(0, 0) == 1.0);
  CHECK(s.membrane(0, 0) == 0.0);
  CHECK(s.adaptOffset(0, 0) == doctest::Approx(p.adaptIncrement));
  const auto r3 = lifStep(s, Matrix::Constant(1, 1, drive), p, w);
  CHECK(r3.threshold(0, 0) == doctest::Approx(1.0 + p.adaptIncrement));
  CHECK(s.adaptOffset(0, 0) == doctest::Approx(p.adaptDecay * p.adaptIncrement + (r3.spikes(0, 0) > 0.5 ? p.adaptIncrement : 0.0)));
}

TEST_CASE("first spike times match the closed-form membrane sum without adaptation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    LifParams p;
    p.tauSyn = 1.0 + 10.0 * unit(rng);
    p.tauMem = 2.0 + 30.0 * unit(rng);
    p.threshold = 0.3 + unit(rng);
    p.adaptIncrement = 0.0;
    p.steps = 40;
    const double a = p.alpha(), b = p.beta();
    const double current = p.threshold * (1 - a) * (1 - b) * (0.5 + 2.0 * unit(rng));
    const double drive = current * 40.0;
    const double i = drive * (1.0 / 40.0);
    int oracle = 40;
    for (int t = 1; t <= 40; ++t) {
      const double v = i / (1 - a) * ((1 - std::pow(b, t)) / (1 - b) - a * (std::pow(b, t) - std::pow(a, t)) / (b - a));
      if (v >= p.threshold) {
        oracle = t;
        break;
      }
    }
    const Encoding e = encode(Matrix::Constant(1, 1, drive), p, scalarWeights());
    CHECK(e.summary.firstSpike(0, 0) == oracle);
  }
}

TEST_CASE("semi-orthogonal projections have orthonormal rows or columns") {
  std::mt19937_64 rng(1);
  const Matrix wide = semiOrthogonal(4, 9, rng);
  CHECK((wide * wide.transpose() - Matrix::Identity(4, 4)).norm() < 1e-12);
  const Matrix tall = semiOrthogonal(9, 4, rng);
  CHECK((tall.transpose() * tall - Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("encoding is deterministic, binary, silent on zero input, and validates inputs") {
  std::mt19937_64 rng(2);
  const TsgeWeights w = initTsge(5, 16, rng);
  const Matrix x = testing::gaussian(rng, 10, 5);
  LifParams p;
  const Encoding a = encode(x, p, w), b = encode(x, p, w);
  CHECK(a.spikes == b.spikes);
  CHECK(a.spikes.steps() == 16);
  CHECK(a.spikes.features() == 16);
  CHECK(encode(Matrix::Zero(10, 5), p, w).spikes.count() == 0);

  Matrix bad = x;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(encode(bad, p, w), Error);
  CHECK_THROWS_AS(encode(Matrix::Zero(10, 4), p, w), Error);
  LifParams invalid;
  invalid.adaptDecay = 1.5;
  CHECK_THROWS_AS(encode(x, invalid, w), Error);
}

TEST_CASE("exploding drive is reported instead of propagating NaN") {
  LifParams p;
  TsgeWeights w = scalarWeights();
  w.projection(0, 0) = 1e300;
  CHECK_THROWS_AS(encode(Matrix::Constant(1, 1, 1e300), p, w), Error);
}

TEST_CASE("stronger constant drive never fires later") {
  LifParams p;
  p.steps = 30;
  double previous = 31.0;
  for (double drive = 1.0; drive < 40.0; drive += 1.5) {
    const double t = encode(Matrix::Constant(1, 1, drive), p, scalarWeights()).summary.firstSpike(0, 0);
    CHECK(t <= previous);
    previous = t;
  }
}
