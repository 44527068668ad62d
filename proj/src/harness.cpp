#include "astdp/harness.hpp"

#include "astdp/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace astdp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean(const std::vector<double>& v) {
  return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Unbiased sample variance.
double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] < v[k - 1]) return false;
  }
  return true;
}

Matrix gaussian(Index rows, Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

std::vector<double> rowHamming(const SpikeTensor& a, const SpikeTensor& b) {
  std::vector<double> out(static_cast<std::size_t>(a.nodes()), 0.0);
  for (Index i = 0; i < a.nodes(); ++i) {
    for (Index t = 0; t < a.steps(); ++t) {
      for (Index j = 0; j < a.features(); ++j) out[static_cast<std::size_t>(i)] += a(i, t, j) != b(i, t, j);
    }
  }
  return out;
}

/// Rows of `x` each moved by `distances[i]` along a random unit direction.
Matrix perturb(const Matrix& x, const std::vector<double>& distances, std::mt19937_64& rng) {
  Matrix dir = gaussian(x.rows(), x.cols(), 1.0, rng);
  dir.rowwise().normalize();
  Matrix out = x;
  for (Index i = 0; i < x.rows(); ++i) out.row(i) += distances[static_cast<std::size_t>(i)] * dir.row(i);
  return out;
}

double meanHamming(const Matrix& x, const Matrix& x2, const LifParams& lif, const TsgeWeights& w) {
  return mean(rowHamming(encode(x, lif, w).spikes, encode(x2, lif, w).spikes));
}

/// Upper tail of the standard normal.
double upperTail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

Json toJson(const Verdict& v) {
  Json j = {{"claim", v.claim}, {"measured", v.measured}, {"bound", v.bound}, {"pass", v.pass}};
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return kNaN;
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

Verdict validateEncoding(const EncodingCheck& c) {
  Verdict v;
  v.claim = "spike encoding preserves input distances and resolution grows with steps and width";
  std::mt19937_64 rng(c.seed);
  const TsgeWeights weights = initTsge(c.featureDim, c.hidden, rng);
  const Matrix x = gaussian(c.pairs, c.featureDim, 1.0, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> dist(static_cast<std::size_t>(c.pairs));
  for (double& d : dist) d = c.maxDistance * unit(rng);
  const Matrix x2 = perturb(x, dist, rng);
  const std::vector<double> ham = rowHamming(encode(x, c.lif, weights).spikes, encode(x2, c.lif, weights).spikes);
  const double r = pearson(dist, ham);

  const std::vector<double> fixed(static_cast<std::size_t>(c.pairs), c.gridDistance);
  const Matrix g2 = perturb(x, fixed, rng);
  std::vector<double> bySteps, byWidth;
  for (Index t : c.stepsGrid) {
    LifParams lif = c.lif;
    lif.steps = t;
    bySteps.push_back(meanHamming(x, g2, lif, weights));
  }
  for (Index h : c.hiddenGrid) {
    std::mt19937_64 local(c.seed);
    byWidth.push_back(meanHamming(x, g2, c.lif, initTsge(c.featureDim, h, local)));
  }

  v.measured = {{"pearson", std::isnan(r) ? Json(nullptr) : Json(r)},
                {"pairs", c.pairs},
                {"stepsGrid", c.stepsGrid},
                {"meanHammingBySteps", bySteps},
                {"hiddenGrid", c.hiddenGrid},
                {"meanHammingByHidden", byWidth}};
  v.bound = {{"pearsonMin", c.minCorrelation}, {"gridTrend", "nondecreasing"}};
  const bool stepsOk = nondecreasing(bySteps), widthOk = nondecreasing(byWidth);
  if (std::isnan(r)) {
    v.reason = "degenerate input: distances or Hamming distances have zero variance";
  } else if (r < c.minCorrelation) {
    v.reason = "correlation below bound";
  } else if (!stepsOk) {
    v.reason = "mean Hamming distance decreases with steps";
  } else if (!widthOk) {
    v.reason = "mean Hamming distance decreases with hidden width";
  }
  v.pass = v.reason.empty();
  return v;
}

Verdict validateEdhmm(const MemoryCheck& c) {
  Verdict v;
  v.claim = "online prototype memory converges to distinct mixture means at rate O(1/sqrt(t))";
  if (c.components < 1 || c.dim < 1 || c.updates < 1 || c.checkpointEvery < 1 || c.epochLength < 1) throw Error("harness", "invalid memory check");
  Json runs = Json::array();
  bool allPass = true;
  std::string reason;
  for (std::uint64_t seed : c.seeds) {
    std::mt19937_64 rng(seed);
    // Component means with pairwise distance at least separation * sigma.
    const double box = c.separation * c.sigma * static_cast<double>(c.components);
    std::uniform_real_distribution<double> place(-box, box);
    Matrix means(c.components, c.dim);
    for (Index k = 0; k < c.components;) {
      for (Index d = 0; d < c.dim; ++d) means(k, d) = place(rng);
      bool ok = true;
      for (Index l = 0; l < k; ++l) ok = ok && (means.row(k) - means.row(l)).norm() >= c.separation * c.sigma;
      if (ok) ++k;
    }
    std::uniform_int_distribution<Index> pick(0, c.components - 1);
    std::normal_distribution<double> noise(0.0, c.sigma);
    auto sample = [&](Index n) {
      Matrix z(n, c.dim);
      for (Index i = 0; i < n; ++i) {
        const Index k = pick(rng);
        for (Index d = 0; d < c.dim; ++d) z(i, d) = means(k, d) + noise(rng);
      }
      return z;
    };

    MemoryParams params;
    params.prototypes = c.components;
    params.countNormalizedGain = true;
    params.seeding = PrototypeSeeding::FarthestPoint;
    const Matrix heldOut = sample(1000);

    auto nearestMean = [&](const PrototypeMemory& memory, Index k, double* dist) {
      Index best = 0;
      double bestDist = std::numeric_limits<double>::infinity();
      for (Index m = 0; m < c.components; ++m) {
        const double d = (memory.prototypes.row(k) - means.row(m)).norm();
        if (d < bestDist) bestDist = d, best = m;
      }
      if (dist) *dist = bestDist;
      return best;
    };

    // Replicate streams over the same mixture estimate the expected curves;
    // the first stream alone is held to the closeness bound.
    const Index replicates = std::max<Index>(1, c.replicates);
    std::vector<double> steps, errors, distortions;
    PrototypeMemory primary;
    for (Index rep = 0; rep < replicates; ++rep) {
      PrototypeMemory memory(params, 1, c.dim);
      seedPrototypes(memory, sample(std::max<Index>(c.seedSamples, c.components)));
      std::size_t e = 0, d = 0;
      for (Index t = 1; t <= c.updates; ++t) {
        const Matrix z = sample(1);
        const MemoryScores s = memoryAnomalyScore(z, matchScores(z, memory), memory);
        updateMemory(memory, z, s.assignment);
        if (t % c.checkpointEvery == 0) {
          double sq = 0.0;
          for (Index k = 0; k < c.components; ++k) {
            double dist = 0.0;
            nearestMean(memory, k, &dist);
            sq += dist * dist;
          }
          if (rep == 0) {
            steps.push_back(static_cast<double>(t));
            errors.push_back(0.0);
          }
          errors[e++] += std::sqrt(sq / static_cast<double>(c.components)) / static_cast<double>(replicates);
        }
        if (t % c.epochLength == 0) {
          if (rep == 0) distortions.push_back(0.0);
          distortions[d++] += distortion(heldOut, memory) / static_cast<double>(replicates);
        }
      }
      if (rep == 0) primary = memory;
    }

    std::vector<double> finalErrors;
    std::vector<Index> owner;
    for (Index k = 0; k < c.components; ++k) {
      double d = 0.0;
      owner.push_back(nearestMean(primary, k, &d));
      finalErrors.push_back(d / c.sigma);
    }
    std::vector<Index> sorted = owner;
    std::sort(sorted.begin(), sorted.end());
    const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    const double worst = *std::max_element(finalErrors.begin(), finalErrors.end());

    std::vector<double> smooth;
    const std::size_t w = static_cast<std::size_t>(std::max<Index>(1, c.smoothingWindow));
    for (std::size_t k = 0; k + w <= distortions.size(); ++k) {
      smooth.push_back(std::accumulate(distortions.begin() + static_cast<std::ptrdiff_t>(k),
                                       distortions.begin() + static_cast<std::ptrdiff_t>(k + w), 0.0) /
                       static_cast<double>(w));
    }
    double worstRise = 0.0;
    for (std::size_t k = 1; k < smooth.size(); ++k) worstRise = std::max(worstRise, smooth[k] - smooth[k - 1]);

    std::vector<double> logT, logE;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      if (errors[k] > 0.0) {
        logT.push_back(std::log(steps[k]));
        logE.push_back(std::log(errors[k]));
      }
    }
    const double rate = slope(logT, logE);

    const bool closeOk = distinct && worst <= c.tolerance;
    const bool descentOk = worstRise <= 0.0;
    const bool rateOk = rate >= c.slopeLo && rate <= c.slopeHi;
    if (!closeOk && reason.empty()) reason = "prototype not within tolerance of a distinct mean (seed " + std::to_string(seed) + ")";
    if (!descentOk && reason.empty()) reason = "smoothed distortion increased (seed " + std::to_string(seed) + ")";
    if (!rateOk && reason.empty()) reason = "convergence slope outside range (seed " + std::to_string(seed) + ")";
    allPass = allPass && closeOk && descentOk && rateOk;
    runs.push_back({{"seed", seed},
                    {"worstErrorInSigma", worst},
                    {"distinctMeans", distinct},
                    {"largestSmoothedRise", worstRise},
                    {"logLogSlope", rate},
                    {"finalDistortion", distortions.empty() ? 0.0 : distortions.back()}});
  }
  v.measured = {{"runs", runs}, {"updates", c.updates}, {"components", c.components}, {"replicates", c.replicates}};
  v.bound = {{"errorInSigmaMax", c.tolerance}, {"slopeRange", {c.slopeLo, c.slopeHi}}, {"smoothedDistortion", "nonincreasing"}};
  v.pass = allPass;
  v.reason = reason;
  return v;
}

SpikePopulation burstyPopulation(const PoolingCheck& c, std::mt19937_64& rng) {
  SpikePopulation pop;
  pop.labels.assign(static_cast<std::size_t>(c.nodes), 0);
  std::fill(pop.labels.begin(), pop.labels.begin() + c.anomalies, 1);
  std::shuffle(pop.labels.begin(), pop.labels.end(), rng);
  pop.spikes = SpikeTensor(c.nodes, c.steps, c.features);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rate = c.expectedSpikes / static_cast<double>(c.steps);
  for (Index i = 0; i < c.nodes; ++i) {
    const bool bursty = pop.labels[static_cast<std::size_t>(i)] == 1;
    const Index length = bursty ? std::max<Index>(1, c.burstLength) : 1;
    const double onset = rate / static_cast<double>(length);
    for (Index j = 0; j < c.features; ++j) {
      for (Index t = 0; t < c.steps; ++t) {
        if (unit(rng) >= onset) continue;
        for (Index b = 0; b < length && t + b < c.steps; ++b) pop.spikes.set(i, t + b, j, true);
      }
    }
  }
  return pop;
}

Verdict validateSrcgp(const PoolingCheck& c) {
  Verdict v;
  v.claim = "irregularity pooling selects anomalies above the base rate; Poisson trains have CV near 1";
  if (c.anomalies < 1 || c.anomalies > c.nodes || c.trials < 2) throw Error("harness", "invalid pooling check");
  std::mt19937_64 rng(c.seed);
  std::vector<std::vector<double>> lifts(c.ratios.size());
  for (Index trial = 0; trial < c.trials; ++trial) {
    const SpikePopulation pop = burstyPopulation(c, rng);
    const Vector score = irregularityScores(pop.spikes, c.pooling).score;
    const double base = static_cast<double>(c.anomalies) / static_cast<double>(c.nodes);
    for (std::size_t r = 0; r < c.ratios.size(); ++r) {
      const Selection sel = selectTopK(score, c.ratios[r]);
      double hits = 0.0;
      for (Index i : sel.indices) hits += pop.labels[static_cast<std::size_t>(i)];
      lifts[r].push_back(hits / static_cast<double>(sel.k) / base);
    }
  }
  Json selection = Json::array();
  bool liftOk = true;
  for (std::size_t r = 0; r < c.ratios.size(); ++r) {
    const double m = mean(lifts[r]);
    const double se = std::sqrt(variance(lifts[r]) / static_cast<double>(lifts[r].size()));
    const double p = se > 0.0 ? upperTail((m - 1.0) / se) : (m > 1.0 ? 0.0 : 1.0);
    const bool ok = m > 1.0 && p < c.alpha;
    liftOk = liftOk && ok;
    selection.push_back({{"ratio", c.ratios[r]}, {"meanLift", m}, {"pValue", p}, {"significant", ok}});
  }

  Json poisson = Json::array();
  bool cvOk = true;
  for (double count : c.poissonCounts) {
    SpikeTensor trains(c.poissonTrains, c.poissonSteps, 1);
    const double rate = count / static_cast<double>(c.poissonSteps);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index i = 0; i < c.poissonTrains; ++i) {
      for (Index t = 0; t < c.poissonSteps; ++t) trains.set(i, t, 0, unit(rng) < rate);
    }
    std::vector<double> cvs;
    for (Index i = 0; i < c.poissonTrains; ++i) {
      if (interSpikeIntervals(spikeTrain(trains, i, 0)).empty()) continue;
      cvs.push_back(nodeCv(trains, i));
    }
    const double m = mean(cvs), var = variance(cvs);
    const double loose = 2.0 / count, tight = 1.0 / (2.0 * count);
    const bool ok = m >= c.cvLo && m <= c.cvHi && var <= loose + c.varianceSlack / count;
    cvOk = cvOk && ok;
    poisson.push_back({{"expectedSpikes", count},
                       {"meanCv", m},
                       {"varCv", var},
                       {"looseBound", loose},
                       {"tightBound", tight},
                       {"withinTightBound", var <= tight},
                       {"trainsUsed", cvs.size()}});
  }
  v.measured = {{"selection", selection}, {"trials", c.trials}, {"poisson", poisson}};
  v.bound = {{"liftAbove", 1.0},
             {"alpha", c.alpha},
             {"cvRange", {c.cvLo, c.cvHi}},
             {"varCv", "2/(lambda T) + " + formatDouble(c.varianceSlack) + "/(lambda T)"}};
  if (!liftOk) v.reason = "selection lift not significant at every ratio";
  else if (!cvOk) v.reason = "Poisson CV statistics outside bounds";
  v.pass = v.reason.empty();
  return v;
}

Verdict validateStdp(const PlasticityCheck& c) {
  Verdict v;
  v.claim = "spike-timing plasticity stays bounded, settles, and encodes timing gaps in weight magnitude";
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> jitter(-c.jitter, c.jitter);
  const Index h = c.features;
  Vector grid(h);
  for (Index j = 0; j < h; ++j) grid(j) = 1.0 + c.spacing * static_cast<double>(j);
  auto draw = [&]() {
    Vector t = grid;
    for (Index j = 0; j < h; ++j) t(j) += jitter(rng);
    return t;
  };

  Matrix w = Matrix::Zero(h, h);
  bool bounded = true;
  std::vector<double> changes;
  Index convergedAt = -1;
  for (Index s = 1; s <= c.updates; ++s) {
    changes.push_back(applyUpdate(w, stdpDelta(draw(), c.stdp), c.stdp));
    bounded = bounded && w.minCoeff() >= c.stdp.clipLo && w.maxCoeff() <= c.stdp.clipHi;
    if (convergedAt < 0 && s >= c.window &&
        *std::max_element(changes.end() - c.window, changes.end()) < c.tolerance) {
      convergedAt = s;
    }
  }

  std::vector<double> gap, magnitude;
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < h; ++j) {
      if (i == j) continue;
      gap.push_back(std::abs(grid(i) - grid(j)));
      magnitude.push_back(std::abs(w(i, j)));
    }
  }
  const double r = pearson(gap, magnitude);

  // Perturb and resume both copies on the same timing stream.
  Matrix ref = w, moved = w;
  std::uniform_int_distribution<int> coin(0, 1);
  for (Index k = 0; k < moved.size(); ++k) moved.data()[k] += coin(rng) ? c.perturbation : -c.perturbation;
  moved = moved.cwiseMax(c.stdp.clipLo).cwiseMin(c.stdp.clipHi);
  const double startGap = (moved - ref).cwiseAbs().maxCoeff();
  double worstGap = startGap;
  for (Index s = 0; s < c.resumeUpdates; ++s) {
    const Matrix delta = stdpDelta(draw(), c.stdp);
    applyUpdate(ref, delta, c.stdp);
    applyUpdate(moved, delta, c.stdp);
    bounded = bounded && moved.minCoeff() >= c.stdp.clipLo && moved.maxCoeff() <= c.stdp.clipHi;
    worstGap = std::max(worstGap, (moved - ref).cwiseAbs().maxCoeff());
  }
  const bool stable = worstGap <= startGap + 1e-12;

  v.measured = {{"convergedAfter", convergedAt < 0 ? Json(nullptr) : Json(convergedAt)},
                {"largestAppliedChange", changes.empty() ? 0.0 : *std::max_element(changes.begin(), changes.end())},
                {"gapWeightCorrelation", std::isnan(r) ? Json(nullptr) : Json(r)},
                {"weightRange", {w.minCoeff(), w.maxCoeff()}},
                {"perturbationGapStart", startGap},
                {"perturbationGapWorst", worstGap}};
  v.bound = {{"updateBudget", c.updates},
             {"changeBelow", c.tolerance},
             {"window", c.window},
             {"correlationMax", c.maxCorrelation},
             {"weightRange", {c.stdp.clipLo, c.stdp.clipHi}}};
  if (!bounded) v.reason = "weights left the clip range";
  else if (convergedAt < 0) v.reason = "no settling within the update budget";
  else if (std::isnan(r) || r > c.maxCorrelation) v.reason = "timing gap and weight magnitude not anticorrelated";
  else if (!stable) v.reason = "perturbation grew after resuming";
  v.pass = v.reason.empty();
  return v;
}

Verdict validateFusion(const FusionCheck& c) {
  Verdict v;
  v.claim = "inverse-variance fusion of unbiased estimators stays unbiased and cuts variance";
  if (c.estimators < 1 || c.estimators > static_cast<Index>(kComponents) || c.samples < 2) {
    throw Error("harness", "invalid fusion check");
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComponentMask mask{};
  for (Index k = 0; k < c.estimators; ++k) mask[static_cast<std::size_t>(k)] = true;

  auto simulate = [&](const std::vector<double>& variances, const RowVector& weights) {
    std::array<Vector, kComponents> parts;
    for (std::size_t k = 0; k < kComponents; ++k) {
      parts[k] = Vector::Constant(c.samples, c.truth);
      if (k < variances.size()) {
        const double sd = std::sqrt(variances[k]);
        for (Index i = 0; i < c.samples; ++i) parts[k](i) += sd * normal(rng);
      }
    }
    const Vector f = fuse(parts, weights);
    return std::vector<double>(f.data(), f.data() + f.size());
  };
  auto inverseWeights = [&](const std::vector<double>& variances, const ComponentMask& m) {
    Matrix logits = Matrix::Zero(1, kComponents);
    for (std::size_t k = 0; k < variances.size(); ++k) logits(0, static_cast<Index>(k)) = -std::log(variances[k]);
    return fusionWeights(logits, m);
  };

  const double s2 = c.sigma * c.sigma;
  const std::vector<double> equal(static_cast<std::size_t>(c.estimators), s2);
  const std::vector<double> fusedEqual = simulate(equal, inverseWeights(equal, mask));
  const double ratio = variance(fusedEqual) / s2;
  const double expected = c.expectedRatio;
  const double tolerance = c.ratioTolerance;
  const double bias = mean(fusedEqual) - c.truth;
  const double se = std::sqrt(variance(fusedEqual) / static_cast<double>(fusedEqual.size()));

  std::vector<double> unequal;
  for (double m : c.unequal) unequal.push_back(m * s2);
  if (unequal.size() > kComponents || unequal.empty()) throw Error("harness", "invalid variance list");
  ComponentMask wide{};
  for (std::size_t k = 0; k < unequal.size(); ++k) wide[k] = true;
  const RowVector inverse = inverseWeights(unequal, wide);
  const RowVector uniform = fusionWeights(Matrix::Zero(1, kComponents), wide);
  const double inverseVar = variance(simulate(unequal, inverse));
  const double uniformVar = variance(simulate(unequal, uniform));

  v.measured = {{"equalVarianceRatio", ratio},
                {"bias", bias},
                {"standardError", se},
                {"inverseVarianceFusedVariance", inverseVar},
                {"uniformFusedVariance", uniformVar},
                {"samples", c.samples}};
  v.bound = {{"ratio", expected}, {"ratioTolerance", tolerance}, {"biasStandardErrors", c.maxStandardErrors}};
  if (std::abs(ratio - expected) > tolerance) v.reason = "equal-variance ratio outside tolerance";
  else if (std::abs(bias) > c.maxStandardErrors * se) v.reason = "fused score is biased";
  else if (!(inverseVar < uniformVar)) v.reason = "inverse-variance weights did not beat uniform weights";
  v.pass = v.reason.empty();
  return v;
}

}  // namespace astdp
