// Acceptance gate: one line per criterion, exit status 1 if any fails.

#include "astdp/checkpoint.hpp"
#include "astdp/harness.hpp"
#include "astdp/metrics.hpp"
#include "astdp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace astdp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

Outcome fromVerdict(const Verdict& v, double seconds, double budget) {
  Outcome o;
  o.pass = v.pass && seconds < budget;
  o.detail = v.measured.dump() + " in " + fmt(seconds, 3) + " s (budget " + fmt(budget) + " s)";
  if (!v.reason.empty()) o.detail += "; " + v.reason;
  return o;
}

Outcome encodingPreservation() {
  const auto t0 = Clock::now();
  const Verdict v = validateEncoding(EncodingCheck{});
  return fromVerdict(v, since(t0), 60.0);
}

/// Membrane after t steps of constant current `i` from rest, summed in closed form.
double closedFormMembrane(double i, double alpha, double beta, int t) {
  const double bt = std::pow(beta, t), at = std::pow(alpha, t);
  return i / (1.0 - alpha) * ((1.0 - bt) / (1.0 - beta) - alpha * (bt - at) / (beta - alpha));
}

Outcome scalarLifOracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> tauSyn(1.5, 15.0), tauMem(2.0, 40.0), theta(0.2, 2.0), unit(0.0, 1.0);
  const Index steps = 60;
  int mismatches = 0, fired = 0;
  for (int trial = 0; trial < 100; ++trial) {
    LifParams p;
    p.tauSyn = tauSyn(rng);
    p.tauMem = tauMem(rng);
    p.threshold = theta(rng);
    p.adaptIncrement = 0.0;
    p.steps = steps;
    const double alpha = p.alpha(), beta = p.beta();
    // Current between 0.3x and 3x the level that reaches threshold only asymptotically.
    const double critical = p.threshold * (1.0 - alpha) * (1.0 - beta);
    const double drive = critical * (0.3 + 2.7 * unit(rng)) * static_cast<double>(steps);
    const double current = drive * (1.0 / static_cast<double>(steps));

    TsgeWeights w{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
    LifState state = LifState::zeros(1, 1);
    int simulated = static_cast<int>(steps);
    for (Index t = 0; t < steps; ++t) {
      if (lifStep(state, Matrix::Constant(1, 1, drive), p, w).spikes(0, 0) > 0.5) {
        simulated = static_cast<int>(t + 1);
        break;
      }
    }
    int oracle = static_cast<int>(steps);
    for (int t = 1; t <= steps; ++t) {
      if (closedFormMembrane(current, alpha, beta, t) >= p.threshold) {
        oracle = t;
        break;
      }
    }
    mismatches += simulated != oracle;
    fired += oracle < steps;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 100 configurations (" +
                               std::to_string(fired) + " fired within the window)"};
}

Outcome memoryConvergence() {
  const auto t0 = Clock::now();
  const Verdict v = validateEdhmm(MemoryCheck{});
  return fromVerdict(v, since(t0), 120.0);
}

Outcome poolingSelection() {
  const auto t0 = Clock::now();
  const Verdict v = validateSrcgp(PoolingCheck{});
  return fromVerdict(v, since(t0), 1e9);
}

Outcome plasticityStability() {
  const auto t0 = Clock::now();
  const Verdict v = validateStdp(PlasticityCheck{});
  return fromVerdict(v, since(t0), 1e9);
}

Outcome fusionCalibration() {
  const auto t0 = Clock::now();
  const Verdict v = validateFusion(FusionCheck{});
  return fromVerdict(v, since(t0), 1e9);
}

Outcome gradientSoundness() {
  const Index n = 12;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LabeledDataset d;
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (unit(rng) < 0.3) edges.emplace_back(i, j);
    }
  }
  d.graph = SparseGraph::fromEdges(n, edges, true);
  d.features.values = Matrix(n, 4);
  for (Index k = 0; k < d.features.values.size(); ++k) d.features.values.data()[k] = normal(rng);
  d.labels.assign(static_cast<std::size_t>(n), 0);
  d.labels[1] = d.labels[5] = d.labels[9] = 1;
  d.split.assign(static_cast<std::size_t>(n), Split::Train);

  ModelConfig c;
  c.featureDim = 4;
  c.hidden = 8;
  c.layers = 2;
  c.midWidth = 6;
  c.lif.steps = 5;
  c.attention.heads = 2;
  c.memory.prototypes = 2;
  c.kernels = {1, 3};
  c.surrogate.kind = ad::SurrogateKind::SigmoidDerivative;
  c.surrogate.smoothForward = true;
  Model m = Model::create(c, 7);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});

  const auto grads = lossGradients(m, d, rows);
  const auto loss = [&] {
    LossBreakdown b;
    lossGradients(m, d, rows, &b);
    return b.total;
  };
  const double h = 1e-4;
  double worst = 0.0;
  std::string worstName;
  int groups = 0;
  forEachParam(
      [&](const std::string& name, Matrix& p) {
        ++groups;
        std::uniform_int_distribution<Index> pick(0, p.size() - 1);
        for (int k = 0; k < 20; ++k) {
          const Index idx = pick(rng);
          const double orig = p.data()[idx];
          p.data()[idx] = orig + h;
          const double up = loss();
          p.data()[idx] = orig - h;
          const double down = loss();
          p.data()[idx] = orig;
          const double fd = (up - down) / (2.0 * h);
          const double analytic = grads.at(name).data()[idx];
          const double rel = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
          if (rel > worst) {
            worst = rel;
            worstName = name;
          }
        }
      },
      m.params);
  return {worst <= 1e-4, "worst relative error " + fmt(worst) + " (" + worstName + ") over " + std::to_string(groups) +
                             " parameter groups x 20 coordinates"};
}

struct DetectionRun {
  double auroc = 0.0;
  double auprc = 0.0;
  double prevalence = 0.0;
  double density = 0.0;
};

DetectionRun detectionRun(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  LabeledDataset data = generateSynthetic(spec);
  data.features = zScoreNormalize(data.features);
  ModelConfig mc;
  mc.featureDim = data.features.values.cols();
  Model model = Model::create(mc, seed);
  TrainConfig tc;
  tc.seed = seed;
  fitWithEarlyStopping(model, data, tc);
  const ForwardResult r = forwardPass(model, data.features.values, data.graph);
  const auto [y, s] = gather(data.labels, r.scores.fused, data.nodesIn(Split::Test));
  DetectionRun out;
  out.auroc = auroc(y, s);
  out.auprc = auprc(y, s);
  out.prevalence = static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());
  out.density = r.spikeDensity;
  return out;
}

std::vector<DetectionRun> detectionRuns;

Outcome endToEndDetection() {
  const auto t0 = Clock::now();
  double auc = 0.0, ap = 0.0, prevalence = 0.0;
  std::string perSeed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    detectionRuns.push_back(detectionRun(seed));
    const DetectionRun& r = detectionRuns.back();
    auc += r.auroc / 5.0;
    ap += r.auprc / 5.0;
    prevalence += r.prevalence / 5.0;
    perSeed += (seed ? ", " : "") + fmt(r.auroc, 3);
  }
  const double seconds = since(t0);
  const bool pass = auc >= 0.85 && ap >= 3.0 * prevalence && seconds < 600.0;
  return {pass, "mean AUROC " + fmt(auc) + " (seeds " + perSeed + "), mean AUPRC " + fmt(ap) + " vs 3x prevalence " +
                    fmt(3.0 * prevalence) + ", " + fmt(seconds, 3) + " s"};
}

Outcome metricOracles() {
  std::mt19937_64 rng(99);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(4, 30)(rng);
    std::vector<int> y(static_cast<std::size_t>(n));
    Vector s(n);
    // Coarse grid so ties are common.
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = std::bernoulli_distribution(0.3)(rng);
      s(i) = std::uniform_int_distribution<int>(0, 8)(rng) / 8.0;
    }
    y[0] = 1;
    y[1] = 0;
    long pos = std::count(y.begin(), y.end(), 1), neg = n - pos;
    long twiceConcordant = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (y[static_cast<std::size_t>(i)] == 1 && y[static_cast<std::size_t>(j)] == 0) {
          twiceConcordant += s(i) > s(j) ? 2 : s(i) == s(j) ? 1 : 0;
        }
      }
    }
    const double rocOracle = static_cast<double>(twiceConcordant) / 2.0 / static_cast<double>(pos * neg);

    std::vector<double> levels(s.data(), s.data() + n);
    std::sort(levels.rbegin(), levels.rend());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double apOracle = 0.0;
    long previousTp = 0;
    for (double level : levels) {
      long tp = 0, predicted = 0;
      for (int i = 0; i < n; ++i) {
        if (s(i) >= level) {
          ++predicted;
          tp += y[static_cast<std::size_t>(i)];
        }
      }
      if (tp > previousTp) {
        apOracle += static_cast<double>(tp - previousTp) / static_cast<double>(pos) *
                    (static_cast<double>(tp) / static_cast<double>(predicted));
      }
      previousTp = tp;
    }
    failures += auroc(y, s) != rocOracle || auprc(y, s) != apOracle;
  }
  return {failures == 0, std::to_string(failures) + " of 100 instances differ from the brute-force values"};
}

Outcome determinismAndPersistence() {
  SyntheticSpec spec;
  spec.numNodes = 100;
  spec.numAnomalies = 10;
  spec.featureDim = 8;
  spec.cliqueSize = 4;
  spec.seed = 5;
  LabeledDataset data = generateSynthetic(spec);
  data.features = zScoreNormalize(data.features);
  ModelConfig mc;
  mc.featureDim = 8;
  mc.hidden = 16;
  mc.layers = 2;
  mc.midWidth = 8;
  mc.memory.prototypes = 8;
  TrainConfig tc;
  tc.maxEpochs = 3;
  tc.batchNodes = 24;
  tc.seed = 5;

  const auto runOnce = [&] {
    Model m = Model::create(mc, 5);
    const FitResult fit = fitWithEarlyStopping(m, data, tc);
    return std::pair{checkpointToJson(m, fit.state).dump(), m};
  };
  const auto [first, model] = runOnce();
  const auto [second, unused] = runOnce();
  const bool identical = first == second;

  const auto dir = std::filesystem::temp_directory_path() / "astdp-acceptance";
  std::filesystem::create_directories(dir);
  const auto path = dir / "checkpoint.json";
  const Checkpoint parsed = checkpointFromJson(Json::parse(first));
  saveCheckpoint(path, parsed.model, parsed.state);
  const Checkpoint loaded = loadCheckpoint(path);
  std::filesystem::remove_all(dir);

  const ForwardResult a = forwardPass(model, data.features.values, data.graph);
  const ForwardResult b = forwardPass(loaded.model, data.features.values, data.graph);
  bool same = a.encoding.spikes == b.encoding.spikes && a.attention == b.attention;
  for (std::size_t k = 0; k < kComponents; ++k) same = same && a.scores.component(k) == b.scores.component(k);
  same = same && a.scores.fused == b.scores.fused;
  const bool reserialized = checkpointToJson(loaded.model, loaded.state).dump() == first;
  return {identical && same && reserialized,
          std::string("repeat runs ") + (identical ? "byte-identical" : "DIFFER") + ", reloaded forward outputs " +
              (same ? "identical" : "DIFFER") + ", re-serialized checkpoint " + (reserialized ? "identical" : "DIFFERS")};
}

Outcome sparsityAccounting() {
  bool inRange = !detectionRuns.empty();
  for (const auto& r : detectionRuns) inRange = inRange && r.density >= 0.0 && r.density <= 1.0;

  SyntheticSpec spec;
  spec.seed = 11;
  LabeledDataset data = generateSynthetic(spec);
  data.features = zScoreNormalize(data.features);
  std::mt19937_64 rng(11);
  const TsgeWeights w = initTsge(data.features.values.cols(), 128, rng);
  const Matrix zeros = Matrix::Zero(data.features.values.rows(), data.features.values.cols());
  LifParams silent;
  const double zeroDensity = spikeDensity(encode(zeros, silent, w).spikes);
  inRange = inRange && zeroDensity >= 0.0 && zeroDensity <= 1.0;

  const std::vector<Index> grid{8, 16, 32, 64};
  std::vector<double> perStep;
  for (Index steps : grid) {
    LifParams p;
    p.steps = steps;
    std::vector<double> times;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = Clock::now();
      const Encoding e = encode(data.features.values, p, w);
      times.push_back(since(t0));
      inRange = inRange && spikeDensity(e.spikes) >= 0.0 && spikeDensity(e.spikes) <= 1.0;
    }
    std::nth_element(times.begin(), times.begin() + 3, times.end());
    perStep.push_back(times[3] / static_cast<double>(steps));
  }
  const auto [lo, hi] = std::minmax_element(perStep.begin(), perStep.end());
  const double spread = *hi / *lo;
  std::string ratios;
  for (std::size_t k = 0; k < perStep.size(); ++k) ratios += (k ? ", " : "") + fmt(perStep[k] * 1e3, 3);
  return {inRange && spread <= 2.0, std::string("densities ") + (inRange ? "within [0,1]" : "OUT OF RANGE") +
                                        ", per-step encoder ms at T=8..64: " + ratios + " (max/min " + fmt(spread, 3) +
                                        ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"encoding preserves input distances", encodingPreservation},
      {"scalar LIF first-spike oracle", scalarLifOracle},
      {"prototype memory convergence", memoryConvergence},
      {"irregularity pooling selection", poolingSelection},
      {"plasticity stability", plasticityStability},
      {"fusion calibration", fusionCalibration},
      {"gradient soundness", gradientSoundness},
      {"end-to-end synthetic detection", endToEndDetection},
      {"metric oracles", metricOracles},
      {"determinism and persistence", determinismAndPersistence},
      {"sparsity accounting", sparsityAccounting},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << k + 1 << "] " << criteria[k].first << ": " << o.detail
              << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
