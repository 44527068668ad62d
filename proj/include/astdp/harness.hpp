#pragma once

#include "astdp/edhmm.hpp"
#include "astdp/io.hpp"
#include "astdp/srcgp.hpp"
#include "astdp/stdp.hpp"
#include "astdp/tsge.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace astdp {

/// Outcome of one validation suite. `measured` and `bound` hold the
/// statistics each check compares; `reason` is set when a check fails.
struct Verdict {
  std::string claim;
  Json measured = Json::object();
  Json bound = Json::object();
  bool pass = false;
  std::string reason;
};

Json toJson(const Verdict& v);

/// Pearson correlation; NaN when either input has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of y on x.
double slope(const std::vector<double>& x, const std::vector<double>& y);

struct EncodingCheck {
  LifParams lif;
  Index featureDim = 32;
  Index hidden = 128;
  Index pairs = 200;
  /// Pairs are x and x + d * u with u a random unit vector and d uniform in [0, maxDistance].
  double maxDistance = 1.0;
  /// Perturbation size used for the resolution grid.
  double gridDistance = 1.0;
  std::vector<Index> stepsGrid{5, 10, 20, 40};
  std::vector<Index> hiddenGrid{16, 32, 64, 128};
  double minCorrelation = 0.8;
  std::uint64_t seed = 0;
};

Verdict validateEncoding(const EncodingCheck& c);

struct MemoryCheck {
  Index components = 5;
  Index dim = 2;
  double sigma = 1.0;
  /// Minimum distance between component means in units of sigma.
  double separation = 8.0;
  Index updates = 2000;
  /// Samples drawn before the stream to place the initial prototypes.
  Index seedSamples = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double tolerance = 0.15;
  Index smoothingWindow = 10;
  /// Spacing of the error checkpoints; distortion is evaluated once per epoch.
  Index checkpointEvery = 20;
  Index epochLength = 100;
  /// Independent streams per mixture averaged for the distortion and rate curves.
  Index replicates = 20;
  double slopeLo = -0.7;
  double slopeHi = -0.3;
};

Verdict validateEdhmm(const MemoryCheck& c);

struct PoolingCheck {
  Index nodes = 200;
  Index anomalies = 20;
  Index features = 8;
  Index steps = 100;
  /// Spikes per feature per window.
  double expectedSpikes = 10.0;
  /// Spikes per burst in anomalous trains; 1 gives anomalies the normal law.
  Index burstLength = 4;
  std::vector<double> ratios{0.2, 0.3, 0.5, 0.7};
  Index trials = 50;
  double alpha = 0.05;
  /// Expected spike counts for the CV checks, and the window they use.
  std::vector<double> poissonCounts{10.0, 20.0, 40.0};
  Index poissonSteps = 1000;
  Index poissonTrains = 2000;
  double cvLo = 0.8;
  double cvHi = 1.2;
  double varianceSlack = 0.5;
  PoolingParams pooling;
  std::uint64_t seed = 0;
};

/// One population for the selection check: spike trains plus labels.
struct SpikePopulation {
  SpikeTensor spikes;
  std::vector<int> labels;
};

SpikePopulation burstyPopulation(const PoolingCheck& c, std::mt19937_64& rng);

Verdict validateSrcgp(const PoolingCheck& c);

struct PlasticityCheck {
  Index features = 8;
  /// Spacing of the mean firing times; jitter is uniform in +-jitter.
  double spacing = 6.0;
  double jitter = 0.5;
  Index updates = 5000;
  Index window = 100;
  double tolerance = 1e-6;
  double maxCorrelation = -0.8;
  double perturbation = 0.01;
  Index resumeUpdates = 1000;
  StdpParams stdp;
  std::uint64_t seed = 0;
};

Verdict validateStdp(const PlasticityCheck& c);

struct FusionCheck {
  Index samples = 20000;
  double truth = 0.3;
  double sigma = 0.1;
  /// Variances used for the inverse-variance comparison, as multiples of sigma^2.
  std::vector<double> unequal{1.0, 1.0, 1.0, 1.0, 100.0};
  Index estimators = 5;
  /// Fused over single-estimator variance at equal variances; 1/estimators in theory.
  double expectedRatio = 0.2;
  double ratioTolerance = 0.02;
  double maxStandardErrors = 3.0;
  std::uint64_t seed = 0;
};

Verdict validateFusion(const FusionCheck& c);

}  // namespace astdp
