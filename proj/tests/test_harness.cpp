#include "astdp/harness.hpp"

#include <doctest.h>

#include <cmath>

using namespace astdp;

TEST_CASE("correlation and slope helpers") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
  CHECK(std::isnan(pearson(x, {1, 1, 1, 1})));
  CHECK(slope(x, y) == doctest::Approx(2.0));
  CHECK(slope(x, z) == doctest::Approx(-1.0));
}

TEST_CASE("bursty populations hold the requested anomalies at matched rates") {
  PoolingCheck c;
  std::mt19937_64 rng(3);
  const SpikePopulation p = burstyPopulation(c, rng);
  CHECK(p.spikes.nodes() == c.nodes);
  CHECK(p.spikes.steps() == c.steps);
  CHECK(std::count(p.labels.begin(), p.labels.end(), 1) == c.anomalies);
  const Matrix rates = spikeRates(p.spikes);
  double normal = 0.0, anomalous = 0.0;
  for (Index i = 0; i < c.nodes; ++i) (p.labels[std::size_t(i)] ? anomalous : normal) += rates.row(i).mean();
  normal /= double(c.nodes - c.anomalies);
  anomalous /= double(c.anomalies);
  CHECK(anomalous == doctest::Approx(normal).epsilon(0.2));
}

TEST_CASE("suites report pass on their defaults and fail on an impossible bound") {
  FusionCheck f;
  f.samples = 4000;
  const Verdict ok = validateFusion(f);
  CHECK(ok.pass);
  CHECK(ok.measured.at("equalVarianceRatio").get<double>() == doctest::Approx(0.2).epsilon(0.1));
  f.expectedRatio = 0.5;
  f.ratioTolerance = 0.01;
  const Verdict bad = validateFusion(f);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.reason.empty());

  PlasticityCheck s;
  s.updates = 1000;
  s.resumeUpdates = 200;
  CHECK(validateStdp(s).pass);

  EncodingCheck e;
  e.pairs = 60;
  e.hidden = 32;
  e.hiddenGrid = {8, 16, 32};
  const Verdict enc = validateEncoding(e);
  CHECK(enc.measured.contains("pearson"));
  const Json j = toJson(enc);
  CHECK(j.at("claim").is_string());
}
