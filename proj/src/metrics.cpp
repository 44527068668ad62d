#include "astdp/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace astdp {

namespace {

void checkInputs(const std::vector<int>& labels, const Vector& scores) {
  if (static_cast<Index>(labels.size()) != scores.size()) throw Error("metrics", "labels and scores differ in length");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("metrics", "labels must be 0 or 1");
  }
}

std::size_t positives(const std::vector<int>& labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

double auroc(const std::vector<int>& labels, const Vector& scores) {
  checkInputs(labels, scores);
  const std::size_t n = labels.size(), pos = positives(labels), neg = n - pos;
  if (pos == 0 || neg == 0) throw Error("metrics", "AUROC needs both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Index>(a)) < scores(static_cast<Index>(b));
  });
  // Twice the positive rank sum keeps mid-ranks integral.
  double twiceRankSum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores(static_cast<Index>(order[j])) == scores(static_cast<Index>(order[i]))) ++j;
    const double twiceMidRank = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) twiceRankSum += twiceMidRank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double twiceU = twiceRankSum - p * (p + 1.0);
  return twiceU / 2.0 / (p * static_cast<double>(neg));
}

double auprc(const std::vector<int>& labels, const Vector& scores) {
  checkInputs(labels, scores);
  const std::size_t n = labels.size(), pos = positives(labels);
  if (pos == 0) throw Error("metrics", "AUPRC needs at least one positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Index>(a)) > scores(static_cast<Index>(b));
  });
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i, gained = 0;
    while (j < n && scores(static_cast<Index>(order[j])) == scores(static_cast<Index>(order[i]))) {
      gained += labels[order[j]] == 1;
      ++j;
    }
    tp += gained;
    if (gained) ap += static_cast<double>(gained) / static_cast<double>(pos) * (static_cast<double>(tp) / static_cast<double>(j));
    i = j;
  }
  return ap;
}

F1Result macroF1AtThreshold(const std::vector<int>& labels, const Vector& scores, double threshold) {
  checkInputs(labels, scores);
  F1Result out;
  Confusion& c = out.confusion;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores(static_cast<Index>(i)) >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  out.f1Anomaly = f1(c.tp, c.fp, c.fn);
  out.f1Normal = f1(c.tn, c.fn, c.fp);
  out.macroF1 = (out.f1Anomaly + out.f1Normal) / 2.0;
  return out;
}

double selectThreshold(const std::vector<int>& labels, const Vector& scores) {
  checkInputs(labels, scores);
  const std::size_t pos = positives(labels);
  if (pos == 0 || pos == labels.size()) throw Error("metrics", "threshold selection needs both classes");
  std::vector<double> sorted(scores.data(), scores.data() + scores.size());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 2) return 0.5;
  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) candidates.push_back((sorted[k] + sorted[k + 1]) / 2.0);
  std::sort(candidates.begin(), candidates.end());
  double best = candidates.front(), bestF1 = -1.0;
  for (double tau : candidates) {
    const double score = macroF1AtThreshold(labels, scores, tau).f1Anomaly;
    if (score > bestF1) {
      bestF1 = score;
      best = tau;
    }
  }
  return best;
}

EvalReport evaluate(const std::vector<int>& labels, const Vector& scores, double threshold, double spikeDensity) {
  EvalReport r;
  r.auroc = auroc(labels, scores);
  r.auprc = auprc(labels, scores);
  const F1Result f = macroF1AtThreshold(labels, scores, threshold);
  r.macroF1 = f.macroF1;
  r.f1Anomaly = f.f1Anomaly;
  r.f1Normal = f.f1Normal;
  r.confusion = f.confusion;
  r.threshold = threshold;
  r.spikeDensity = spikeDensity;
  return r;
}

std::pair<std::vector<int>, Vector> gather(const std::vector<int>& labels, const Vector& scores,
                                           const std::vector<Index>& nodes) {
  std::vector<int> y;
  Vector s(static_cast<Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    y.push_back(labels[static_cast<std::size_t>(nodes[k])]);
    s(static_cast<Index>(k)) = scores(nodes[k]);
  }
  return {std::move(y), std::move(s)};
}

}  // namespace astdp
