#include "astdp/srcgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace astdp {

namespace {

constexpr double kEps = 1e-8;

struct FeatureStats {
  double cv = 0.0;
  double burst = 0.0;
};

FeatureStats featureStats(const SpikeTensor& s, Index node, Index feature, int threshold) {
  int previous = -1, intervals = 0, shortOnes = 0;
  double sum = 0.0, sumSq = 0.0;
  for (Index t = 0; t < s.steps(); ++t) {
    if (!s(node, t, feature)) continue;
    const int time = static_cast<int>(t + 1);
    if (previous >= 0) {
      const double isi = time - previous;
      sum += isi;
      sumSq += isi * isi;
      ++intervals;
      if (isi < threshold) ++shortOnes;
    }
    previous = time;
  }
  if (intervals == 0) return {};
  const double mean = sum / intervals;
  const double var = std::max(0.0, sumSq / intervals - mean * mean);
  return {std::sqrt(var) / (mean + kEps), shortOnes / (intervals + kEps)};
}

}  // namespace

void PoolingParams::validate() const {
  if (!(ratio > 0 && ratio <= 1)) throw Error("srcgp", "pooling ratio must lie in (0,1]");
  if (burstIsiThreshold < 1) throw Error("srcgp", "burst threshold must be positive");
}

double nodeCv(const SpikeTensor& s, Index node) {
  double total = 0.0;
  for (Index j = 0; j < s.features(); ++j) total += featureStats(s, node, j, 3).cv;
  return total / static_cast<double>(s.features());
}

double nodeBurst(const SpikeTensor& s, Index node, int threshold) {
  double total = 0.0;
  for (Index j = 0; j < s.features(); ++j) total += featureStats(s, node, j, threshold).burst;
  return total / static_cast<double>(s.features());
}

Irregularity irregularityScores(const SpikeTensor& s, const PoolingParams& params) {
  params.validate();
  const Index n = s.nodes();
  Irregularity out{Vector(n), Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    double cv = 0.0, burst = 0.0;
    for (Index j = 0; j < s.features(); ++j) {
      const FeatureStats f = featureStats(s, i, j, params.burstIsiThreshold);
      cv += f.cv;
      burst += f.burst;
    }
    out.cv(i) = cv / static_cast<double>(s.features());
    out.burst(i) = burst / static_cast<double>(s.features());
  }
  out.score = params.cvWeight * out.cv + params.burstWeight * out.burst;
  return out;
}

Selection selectTopK(const Vector& scores, double ratio) {
  if (scores.size() < 1) throw Error("srcgp", "cannot select from an empty score vector");
  if (!(ratio > 0 && ratio <= 1)) throw Error("srcgp", "pooling ratio must lie in (0,1]");
  const Index n = scores.size();
  const Index k = std::min<Index>(n, static_cast<Index>(std::ceil(ratio * static_cast<double>(n) - 1e-12)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  order.resize(static_cast<std::size_t>(k));
  return {std::move(order), k};
}

Vector isolationScores(const Vector& scores, const Vector& burst) {
  const Index n = scores.size();
  if (n < 2) throw Error("srcgp", "isolation scores need at least two nodes");
  if (burst.size() != n) throw Error("srcgp", "burst vector length mismatch");
  const double mean = scores.mean();
  const double sd = std::sqrt((scores.array() - mean).square().mean());
  return ((scores.array() - mean).abs() / (sd + kEps) * (1.0 + burst.array())).matrix();
}

Matrix pooledFeatures(const SpikeTensor& s, const std::vector<Index>& indices, const Matrix& poolProj) {
  const Matrix rates = spikeRates(s);
  if (poolProj.rows() != rates.cols()) throw Error("srcgp", "pool projection dimension mismatch");
  Matrix gathered(static_cast<Index>(indices.size()), rates.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= rates.rows()) throw Error("srcgp", "selected index out of range");
    gathered.row(static_cast<Index>(r)) = rates.row(indices[r]);
  }
  return gathered * poolProj;
}

}  // namespace astdp
