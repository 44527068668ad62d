#pragma once

#include "astdp/spike.hpp"

#include <cstddef>
#include <vector>

namespace astdp {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

struct F1Result {
  double macroF1 = 0.0;
  double f1Anomaly = 0.0;
  double f1Normal = 0.0;
  Confusion confusion;
};

/// Mann-Whitney statistic with half credit for ties.
double auroc(const std::vector<int>& labels, const Vector& scores);
/// Step-wise average precision; tied scores form one threshold.
double auprc(const std::vector<int>& labels, const Vector& scores);
/// Predicts anomaly where score >= threshold.
F1Result macroF1AtThreshold(const std::vector<int>& labels, const Vector& scores, double threshold);
/// Threshold maximising anomaly-class F1 over midpoints of sorted unique
/// scores plus 0 and 1; lowest wins ties, 0.5 when all scores coincide.
double selectThreshold(const std::vector<int>& labels, const Vector& scores);

struct EvalReport {
  double auprc = 0.0;
  double auroc = 0.0;
  double macroF1 = 0.0;
  double f1Anomaly = 0.0;
  double f1Normal = 0.0;
  double threshold = 0.5;
  Confusion confusion;
  double spikeDensity = 0.0;
};

EvalReport evaluate(const std::vector<int>& labels, const Vector& scores, double threshold, double spikeDensity);

/// Labels and scores restricted to `nodes`.
std::pair<std::vector<int>, Vector> gather(const std::vector<int>& labels, const Vector& scores,
                                           const std::vector<Index>& nodes);

}  // namespace astdp
