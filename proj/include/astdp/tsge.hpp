#pragma once

#include "astdp/autodiff.hpp"
#include "astdp/graph.hpp"

#include <cmath>
#include <random>

namespace astdp {

struct LifParams {
  double tauSyn = 5.0;
  double tauMem = 20.0;
  double threshold = 1.0;
  double adaptDecay = 0.95;
  double adaptIncrement = 0.1;
  Index steps = 16;

  double alpha() const { return std::exp(-1.0 / tauSyn); }
  double beta() const { return std::exp(-1.0 / tauMem); }
  void validate() const;
};

/// Encoder weights. `synapticScale` and `adaptGain` are 1 x H rows.
template <typename T>
struct TsgeWeightsT {
  T projection;
  T recurrent;
  T synapticScale;
  T adaptGain;
};

using TsgeWeights = TsgeWeightsT<Matrix>;
using TsgeVars = TsgeWeightsT<ad::Var>;

template <typename F, typename... P>
void forEachParam(F&& f, TsgeWeightsT<P>&... w) {
  f("tsge.projection", w.projection...);
  f("tsge.recurrent", w.recurrent...);
  f("tsge.synapticScale", w.synapticScale...);
  f("tsge.adaptGain", w.adaptGain...);
}

/// Semi-orthogonal projection, Gaussian recurrent weights with gain 1/sqrt(H),
/// unit synaptic scale and adaptation gain.
TsgeWeights initTsge(Index featureDim, Index hidden, std::mt19937_64& rng);

/// F x H matrix with orthonormal rows (F <= H) or orthonormal columns (F > H).
Matrix semiOrthogonal(Index rows, Index cols, std::mt19937_64& rng);

struct LifState {
  Matrix membrane;
  Matrix current;
  Matrix adaptOffset;

  static LifState zeros(Index nodes, Index hidden);
};

struct LifStepResult {
  Matrix spikes;
  Matrix threshold;
};

Matrix project(const Matrix& x, const Matrix& projection);
Matrix project(const FeatureMatrix& x, const Matrix& projection);

/// One step of the adaptive LIF recurrence; `drive` is the projected input.
LifStepResult lifStep(LifState& state, const Matrix& drive, const LifParams& params,
                      const TsgeWeights& weights);

struct Encoding {
  SpikeTensor spikes;
  SpikeSummary summary;
};

Encoding encode(const Matrix& x, const LifParams& params, const TsgeWeights& weights);

/// Differentiable encoder run. `steps` holds the [N x H] spike matrix of every
/// step; `tensor` and `summary` are the same spikes in hard form.
struct EncodedVars {
  ad::Var projected;
  std::vector<ad::Var> steps;
  SpikeTensor tensor;
  SpikeSummary summary;
};

EncodedVars encodeVars(const Matrix& x, const TsgeVars& weights, const LifParams& params,
                       const ad::SurrogateSpec& surrogate);

}  // namespace astdp
