#pragma once

#include "astdp/spike.hpp"

#include <cstdint>
#include <vector>

namespace astdp {

enum class PrototypeSeeding { FirstDistinct, FarthestPoint };

struct MemoryParams {
  Index prototypes = 50;
  double temporalMix = 0.5;
  double temperature = 1.0;
  double matchThreshold = 0.5;
  double learningRate = 0.01;
  double strengthDecay = 0.99;
  double strengthGain = 0.05;
  double strengthScale = 10.0;
  double homeoDecay = 0.999;
  double homeoFloor = 0.1;
  /// Step size 1/n_k (running mean of everything a prototype has absorbed)
  /// instead of the fixed learning rate.
  bool countNormalizedGain = false;
  PrototypeSeeding seeding = PrototypeSeeding::FirstDistinct;

  void validate() const;
};

struct PrototypeMemory {
  MemoryParams params;
  Matrix prototypes;
  Vector strength;
  Vector homeostasis;
  Matrix kernels;
  /// Total number of points each prototype has absorbed.
  Vector absorbed;
  bool seeded = false;

  PrototypeMemory() = default;
  PrototypeMemory(const MemoryParams& params, Index steps, Index hidden);

  Index size() const { return prototypes.rows(); }
};

/// Rate code plus kernel-weighted temporal code, [N x H].
Matrix combinedRepresentation(const SpikeTensor& s, const PrototypeMemory& memory);

/// Initialises prototypes from the rows of `z`.
void seedPrototypes(PrototypeMemory& memory, const Matrix& z);

/// exp(-||z_i - p_k|| / temperature) * h_k * s_k, [N x P].
Matrix matchScores(const Matrix& z, const PrototypeMemory& memory);

struct MemoryScores {
  Vector raw;
  std::vector<Index> assignment;
};

/// Three-factor score: mismatch x (1 + residual) x (1 + relative margin).
MemoryScores memoryAnomalyScore(const Matrix& z, const Matrix& match, const PrototypeMemory& memory);

void updateMemory(PrototypeMemory& memory, const Matrix& z, const std::vector<Index>& assignment);

/// Mean over rows of the squared distance to the nearest prototype.
double distortion(const Matrix& z, const PrototypeMemory& memory);

}  // namespace astdp
