#pragma once

#include "astdp/autodiff.hpp"

#include <random>
#include <string>
#include <vector>

namespace astdp {

/// One H x H channel-mixing matrix per tap and scale, a 1 x H bias per scale
/// and an (S*H) x H projection of the concatenated time means.
template <typename T>
struct MstcWeightsT {
  std::vector<std::vector<T>> taps;
  std::vector<T> bias;
  T fusion;
};

using MstcWeights = MstcWeightsT<Matrix>;
using MstcVars = MstcWeightsT<ad::Var>;

template <typename F, typename First, typename... Rest>
void forEachParam(F&& f, MstcWeightsT<First>& w, MstcWeightsT<Rest>&... rest) {
  for (std::size_t s = 0; s < w.taps.size(); ++s) {
    const std::string scale = "mstc.k" + std::to_string(w.taps[s].size());
    for (std::size_t o = 0; o < w.taps[s].size(); ++o) {
      f(scale + ".tap" + std::to_string(o), w.taps[s][o], rest.taps[s][o]...);
    }
    f(scale + ".bias", w.bias[s], rest.bias[s]...);
  }
  f("mstc.fusion", w.fusion, rest.fusion...);
}

MstcWeights initMstc(Index hidden, const std::vector<int>& kernelSizes, std::mt19937_64& rng);

/// Same-padded cross-correlation along time at one scale; element t is the
/// [N x H] output at step t.
std::vector<Matrix> convScale(const SpikeTensor& s, const MstcWeights& weights, std::size_t scale);

struct TemporalFeatures {
  Matrix hidden;
  std::vector<Matrix> scaleMeans;
};

TemporalFeatures temporalFeatures(const SpikeTensor& s, const MstcWeights& weights);

/// sigmoid(feature-mean of the across-scale population std).
Vector temporalAnomalyScore(const std::vector<Matrix>& scaleMeans);

struct TemporalVars {
  ad::Var hidden;
  std::vector<ad::Var> scaleMeans;
  ad::Var score;
};

/// Differentiable time means via per-tap window sums of the spike steps.
TemporalVars temporalFeatureVars(const std::vector<ad::Var>& steps, const MstcVars& weights);

}  // namespace astdp
