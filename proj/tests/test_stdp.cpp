#include "astdp/stdp.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace astdp;

TEST_CASE("timing kernel closed forms") {
  StdpParams p;
  const Vector times = (Vector(3) << 2.0, 5.0, 5.0).finished();
  const Matrix d = stdpDelta(times, p);
  // Post fires after pre: potentiation.
  CHECK(d(1, 0) == doctest::Approx(p.aPlus * std::exp(-3.0 / p.tauPlus)));
  // Post fires before pre: depression.
  CHECK(d(0, 1) == doctest::Approx(-p.aMinus * std::exp(-3.0 / p.tauMinus)));
  CHECK(d(1, 2) == 0.0);
  CHECK(d.diagonal().isZero());

  p.anticausal = true;
  const Matrix r = stdpDelta(times, p);
  CHECK(r(0, 1) == doctest::Approx(p.aPlus * std::exp(-3.0 / p.tauPlus)));
  CHECK(r(1, 0) == doctest::Approx(-p.aMinus * std::exp(-3.0 / p.tauMinus)));
}

TEST_CASE("kernel magnitude decays with the timing gap") {
  StdpParams p;
  Vector times(6);
  times << 0.0, 1.0, 2.0, 4.0, 8.0, 16.0;
  const Matrix d = stdpDelta(times, p);
  for (Index j = 1; j + 1 < 6; ++j) CHECK(std::abs(d(j, 0)) > std::abs(d(j + 1, 0)));
}

TEST_CASE("updates are scaled, clipped and report the applied change") {
  StdpParams p;
  Matrix w = (Matrix(2, 2) << 0.0, 0.99995, -0.5, 0.2).finished();
  const Matrix delta = (Matrix(2, 2) << 1.0, 1.0, -1.0, 0.0).finished();
  const double change = applyUpdate(w, delta, p);
  CHECK(w(0, 0) == doctest::Approx(p.beta));
  CHECK(w(0, 1) == 1.0);
  CHECK(w(1, 0) == doctest::Approx(-0.5 - p.beta));
  CHECK(w(1, 1) == 0.2);
  CHECK(change == doctest::Approx(p.beta));
  Matrix big = Matrix::Zero(2, 2);
  StdpParams fast = p;
  fast.beta = 10.0;
  applyUpdate(big, delta, fast);
  CHECK(big.maxCoeff() <= 1.0);
  CHECK(big.minCoeff() >= -1.0);
  CHECK_THROWS_AS(applyUpdate(big, Matrix::Zero(3, 3), p), Error);
}

TEST_CASE("weights stay in the clip range under any sequence of timings") {
  std::mt19937_64 rng(1);
  StdpParams p;
  p.beta = 0.5;
  std::mt19937_64 init(2);
  Matrix w = initStdp(5, init);
  CHECK(w.cwiseAbs().maxCoeff() <= 0.1);
  std::uniform_real_distribution<double> t(1.0, 16.0);
  for (int k = 0; k < 500; ++k) {
    Vector times(5);
    for (Index j = 0; j < 5; ++j) times(j) = t(rng);
    applyUpdate(w, stdpDelta(times, p), p);
    REQUIRE(w.maxCoeff() <= 1.0);
    REQUIRE(w.minCoeff() >= -1.0);
  }
}

TEST_CASE("strength is the column-wise absolute sum") {
  const Matrix w = (Matrix(2, 2) << 1.0, -2.0, -3.0, 0.5).finished();
  CHECK(stdpStrength(w) == Vector((Vector(2) << 4.0, 2.5).finished()));
  CHECK(stdpForward(Matrix::Identity(2, 2), w) == w);
  StdpParams bad;
  bad.clipLo = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
