#include "astdp/mstc.hpp"

#include <cmath>

namespace astdp {

namespace {

Matrix gaussian(Index rows, Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace

MstcWeights initMstc(Index hidden, const std::vector<int>& kernelSizes, std::mt19937_64& rng) {
  if (kernelSizes.empty()) throw Error("mstc", "at least one kernel size is required");
  MstcWeights w;
  for (int k : kernelSizes) {
    if (k < 1 || k % 2 == 0) throw Error("mstc", "kernel sizes must be odd");
    const double sd = 1.0 / std::sqrt(static_cast<double>(hidden * k));
    std::vector<Matrix> taps;
    for (int o = 0; o < k; ++o) taps.push_back(gaussian(hidden, hidden, sd, rng));
    w.taps.push_back(std::move(taps));
    w.bias.push_back(Matrix::Zero(1, hidden));
  }
  const Index width = hidden * static_cast<Index>(kernelSizes.size());
  w.fusion = gaussian(width, hidden, 1.0 / std::sqrt(static_cast<double>(width)), rng);
  return w;
}

std::vector<Matrix> convScale(const SpikeTensor& s, const MstcWeights& weights, std::size_t scale) {
  const auto& taps = weights.taps.at(scale);
  const Index k = static_cast<Index>(taps.size()), r = (k - 1) / 2, steps = s.steps();
  if (k > 2 * steps - 1) throw Error("mstc", "kernel longer than the padded window");
  if (taps.front().rows() != s.features()) throw Error("mstc", "kernel channel mismatch");
  std::vector<Matrix> inputs;
  for (Index t = 0; t < steps; ++t) inputs.push_back(s.step(t));
  std::vector<Matrix> out;
  for (Index t = 0; t < steps; ++t) {
    Matrix f = weights.bias[scale].replicate(s.nodes(), 1);
    for (Index o = 0; o < k; ++o) {
      const Index u = t + o - r;
      if (u >= 0 && u < steps) f.noalias() += inputs[static_cast<std::size_t>(u)] * taps[static_cast<std::size_t>(o)];
    }
    out.push_back(std::move(f));
  }
  return out;
}

TemporalFeatures temporalFeatures(const SpikeTensor& s, const MstcWeights& weights) {
  std::vector<ad::Var> steps;
  for (Index t = 0; t < s.steps(); ++t) steps.emplace_back(s.step(t));
  MstcVars w;
  for (std::size_t sc = 0; sc < weights.taps.size(); ++sc) {
    std::vector<ad::Var> taps;
    for (const auto& m : weights.taps[sc]) taps.emplace_back(m);
    w.taps.push_back(std::move(taps));
    w.bias.emplace_back(weights.bias[sc]);
  }
  w.fusion = ad::Var(weights.fusion);
  const TemporalVars v = temporalFeatureVars(steps, w);
  TemporalFeatures out{v.hidden.value(), {}};
  for (const auto& m : v.scaleMeans) out.scaleMeans.push_back(m.value());
  return out;
}

Vector temporalAnomalyScore(const std::vector<Matrix>& scaleMeans) {
  if (scaleMeans.empty()) throw Error("mstc", "no scales to compare");
  std::vector<ad::Var> parts;
  for (const auto& m : scaleMeans) parts.emplace_back(m);
  return ad::sigmoid(ad::rowMean(ad::stdAcross(parts))).value().col(0);
}

TemporalVars temporalFeatureVars(const std::vector<ad::Var>& steps, const MstcVars& weights) {
  using namespace ad;
  if (steps.empty()) throw Error("mstc", "empty spike sequence");
  const Index count = static_cast<Index>(steps.size());
  const Index n = steps.front().rows(), h = steps.front().cols();
  std::vector<Var> prefix{Var(Matrix::Zero(n, h))};
  for (const auto& s : steps) prefix.push_back(prefix.back() + s);

  TemporalVars out;
  for (std::size_t sc = 0; sc < weights.taps.size(); ++sc) {
    const auto& taps = weights.taps[sc];
    const Index k = static_cast<Index>(taps.size()), r = (k - 1) / 2;
    if (k > 2 * count - 1) throw Error("mstc", "kernel longer than the padded window");
    std::vector<Var> terms;
    for (Index o = 0; o < k; ++o) {
      const Index lo = std::max<Index>(0, o - r), hi = std::min<Index>(count - 1, count - 1 + o - r);
      if (lo > hi) continue;
      const Var window = prefix[static_cast<std::size_t>(hi + 1)] - prefix[static_cast<std::size_t>(lo)];
      terms.push_back(matmul(window, taps[static_cast<std::size_t>(o)]));
    }
    out.scaleMeans.push_back(addRow(scale(sum(terms), 1.0 / static_cast<double>(count)), weights.bias[sc]));
  }
  out.hidden = matmul(concatCols(out.scaleMeans), weights.fusion);
  out.score = sigmoid(rowMean(stdAcross(out.scaleMeans)));
  return out;
}

}  // namespace astdp
