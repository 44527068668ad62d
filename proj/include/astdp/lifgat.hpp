#pragma once

#include "astdp/autodiff.hpp"
#include "astdp/graph.hpp"

#include <random>
#include <string>

namespace astdp {

struct LifgatParams {
  Index heads = 4;
  double attThreshold = 0.5;
  double tauMem = 20.0;
  Index steps = 16;
  bool lateralInhibition = true;
  /// Spikes replaced by the raw membrane with no reset; used to compare the
  /// layer against plain attention aggregation.
  bool passThrough = false;

  void validate(Index hidden) const;
};

/// `outBias` is 1 x H, `countGain` 1 x 1, `lateral` 1 x M.
template <typename T>
struct LifgatWeightsT {
  T query;
  T key;
  T value;
  T out;
  T outBias;
  T countGain;
  T lateral;
};

using LifgatWeights = LifgatWeightsT<Matrix>;
using LifgatVars = LifgatWeightsT<ad::Var>;

template <typename F, typename... P>
void forEachParam(F&& f, const std::string& prefix, LifgatWeightsT<P>&... w) {
  f(prefix + ".query", w.query...);
  f(prefix + ".key", w.key...);
  f(prefix + ".value", w.value...);
  f(prefix + ".out", w.out...);
  f(prefix + ".outBias", w.outBias...);
  f(prefix + ".countGain", w.countGain...);
  f(prefix + ".lateral", w.lateral...);
}

LifgatWeights initLifgat(Index hidden, Index heads, std::mt19937_64& rng);

/// Per-node count share and spike-onset step derived from a summary: the
/// modulation at step t is (1 + gain * countShare) * [onset <= t].
struct Modulation {
  Vector countShare;
  Vector meanOnset;
};

Modulation modulationInputs(const SpikeSummary& summary);
Vector modulationFactor(const SpikeSummary& summary, double countGain, Index step);

/// Attention weights for every stored edge of `graph` (which must include
/// self-loops), one column per head. Row order follows the CSR layout.
struct AttentionTable {
  SparseGraph graph;
  Matrix weights;
};

AttentionTable attentionWeights(const Matrix& hin, const SparseGraph& graph, const LifgatWeights& weights,
                                const Vector& modulation, Index heads);

/// Edge-softmax aggregation per head. `modulation` is N x 1 and scales the
/// logits of each source node.
ad::Var sparseAttention(const ad::Var& query, const ad::Var& key, const ad::Var& value,
                        const ad::Var& modulation, const SparseGraph& graph, Index heads);

struct LayerOutput {
  Matrix hidden;
  double spikeRate = 0.0;
};

LayerOutput layerForward(const Matrix& hin, const SparseGraph& graph, const SpikeSummary& summary,
                         const LifgatWeights& weights, const LifgatParams& params);

/// Differentiable layer. `graph` must already include self-loops.
ad::Var layerForwardVars(const ad::Var& hin, const SparseGraph& graph, const SpikeSummary& summary,
                         const LifgatVars& weights, const LifgatParams& params,
                         const ad::SurrogateSpec& surrogate, double* spikeRate = nullptr);

}  // namespace astdp
