#pragma once

#include "astdp/spike.hpp"

#include <vector>

namespace astdp {

struct PoolingParams {
  double ratio = 0.5;
  double cvWeight = 1.0;
  double burstWeight = 1.0;
  int burstIsiThreshold = 3;

  void validate() const;
};

/// Feature-averaged coefficient of variation of inter-spike intervals.
double nodeCv(const SpikeTensor& s, Index node);
/// Feature-averaged fraction of inter-spike intervals below `threshold`.
double nodeBurst(const SpikeTensor& s, Index node, int threshold = 3);

struct Irregularity {
  Vector cv;
  Vector burst;
  Vector score;
};

Irregularity irregularityScores(const SpikeTensor& s, const PoolingParams& params);

struct Selection {
  std::vector<Index> indices;
  Index k = 0;
};

/// ceil(ratio * N) highest scores, ties to the lower index, in rank order.
Selection selectTopK(const Vector& scores, double ratio);

/// |z-score of `scores`| * (1 + burst) for every node.
Vector isolationScores(const Vector& scores, const Vector& burst);

Matrix pooledFeatures(const SpikeTensor& s, const std::vector<Index>& indices, const Matrix& poolProj);

}  // namespace astdp
