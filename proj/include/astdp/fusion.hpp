#pragma once

#include "astdp/autodiff.hpp"

#include <array>
#include <random>
#include <vector>

namespace astdp {

enum Component : std::size_t { Pred = 0, Mem = 1, Iso = 2, Temp = 3, Uncert = 4 };
inline constexpr std::size_t kComponents = 5;
inline constexpr std::array<const char*, kComponents> kComponentNames{"pred", "mem", "iso", "temp", "uncert"};

using ComponentMask = std::array<bool, kComponents>;
inline constexpr ComponentMask kAllComponents{true, true, true, true, true};

/// Fusion logits (1 x 5) and the two-layer prediction head.
template <typename T>
struct FusionWeightsT {
  T logits;
  T hidden;
  T hiddenBias;
  T output;
  T outputBias;
};

using FusionWeights = FusionWeightsT<Matrix>;
using FusionVars = FusionWeightsT<ad::Var>;

template <typename F, typename... P>
void forEachParam(F&& f, FusionWeightsT<P>&... w) {
  f("fusion.logits", w.logits...);
  f("head.hidden", w.hidden...);
  f("head.hiddenBias", w.hiddenBias...);
  f("head.output", w.output...);
  f("head.outputBias", w.outputBias...);
}

FusionWeights initFusion(Index hidden, Index midWidth, std::mt19937_64& rng);

struct AnomalyScoreVector {
  Vector pred;
  Vector mem;
  Vector iso;
  Vector temp;
  Vector uncert;
  Vector fused;

  const Vector& component(std::size_t k) const;
  Index size() const { return fused.size(); }
};

/// sigmoid(head([attention || temporal])).
Vector predictionScore(const Matrix& attention, const Matrix& temporal, const FusionWeights& head);
ad::Var predictionVar(const ad::Var& attention, const ad::Var& temporal, const FusionVars& head);

/// sigmoid of the per-node population std of the four other components.
Vector uncertaintyScore(const Vector& pred, const Vector& mem, const Vector& iso, const Vector& temp);

/// Softmax of the logits over enabled components; disabled entries are 0.
RowVector fusionWeights(const Matrix& logits, const ComponentMask& enabled = kAllComponents);

Vector fuse(const std::array<Vector, kComponents>& components, const RowVector& weights);

/// Differentiable fusion of N x 1 component columns.
ad::Var fuseVar(const std::array<ad::Var, kComponents>& components, const ad::Var& logits,
                const ComponentMask& enabled = kAllComponents);

struct LossCoefficients {
  double mem = 0.6;
  double iso = 0.2;
  double reg = 0.2;
  double clampEps = 1e-7;
};

struct LossBreakdown {
  double bce = 0.0;
  double mem = 0.0;
  double iso = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

double regularization(const Matrix& stdpWeights, const Matrix& prototypes);

/// Loss over `rows`. Memory and isolation scores enter as constants.
ad::Var totalLossVar(const std::vector<int>& labels, const std::vector<Index>& rows, const ad::Var& fused,
                     const Vector& memScore, const Vector& isoScore, double reg, const LossCoefficients& coeffs,
                     LossBreakdown* breakdown = nullptr);

LossBreakdown totalLoss(const std::vector<int>& labels, const std::vector<Index>& rows, const Vector& fused,
                        const Vector& memScore, const Vector& isoScore, const Matrix& stdpWeights,
                        const Matrix& prototypes, const LossCoefficients& coeffs = {});

}  // namespace astdp
