#include "astdp/fusion.hpp"

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

ad::Var column(const Vector& v) { return ad::Var(Matrix(v)); }

}  // namespace

FusionWeights initFusion(Index hidden, Index midWidth, std::mt19937_64& rng) {
  FusionWeights w;
  w.logits = Matrix::Zero(1, kComponents);
  w.hidden = gaussian(2 * hidden, midWidth, 1.0 / std::sqrt(static_cast<double>(2 * hidden)), rng);
  w.hiddenBias = Matrix::Zero(1, midWidth);
  w.output = gaussian(midWidth, 1, 1.0 / std::sqrt(static_cast<double>(midWidth)), rng);
  w.outputBias = Matrix::Zero(1, 1);
  return w;
}

const Vector& AnomalyScoreVector::component(std::size_t k) const {
  switch (k) {
    case Pred: return pred;
    case Mem: return mem;
    case Iso: return iso;
    case Temp: return temp;
    case Uncert: return uncert;
    default: throw Error("fusion-loss", "component index out of range");
  }
}

ad::Var predictionVar(const ad::Var& attention, const ad::Var& temporal, const FusionVars& head) {
  using namespace ad;
  if (attention.rows() != temporal.rows()) throw Error("fusion-loss", "prediction inputs differ in rows");
  const Var mid = tanh(addRow(matmul(concatCols({attention, temporal}), head.hidden), head.hiddenBias));
  return sigmoid(addRow(matmul(mid, head.output), head.outputBias));
}

Vector predictionScore(const Matrix& attention, const Matrix& temporal, const FusionWeights& head) {
  using ad::Var;
  const FusionVars v{Var(head.logits), Var(head.hidden), Var(head.hiddenBias), Var(head.output), Var(head.outputBias)};
  return predictionVar(Var(attention), Var(temporal), v).value().col(0);
}

Vector uncertaintyScore(const Vector& pred, const Vector& mem, const Vector& iso, const Vector& temp) {
  return ad::sigmoid(ad::stdAcross({column(pred), column(mem), column(iso), column(temp)})).value().col(0);
}

RowVector fusionWeights(const Matrix& logits, const ComponentMask& enabled) {
  if (logits.rows() != 1 || logits.cols() != static_cast<Index>(kComponents)) {
    throw Error("fusion-loss", "fusion logits must be 1 x 5");
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kComponents; ++k) {
    if (enabled[k]) top = std::max(top, logits(0, static_cast<Index>(k)));
  }
  if (!std::isfinite(top)) throw Error("fusion-loss", "no component enabled");
  RowVector w = RowVector::Zero(kComponents);
  for (std::size_t k = 0; k < kComponents; ++k) {
    if (enabled[k]) w(static_cast<Index>(k)) = std::exp(logits(0, static_cast<Index>(k)) - top);
  }
  return w / w.sum();
}

Vector fuse(const std::array<Vector, kComponents>& components, const RowVector& weights) {
  Vector out = Vector::Zero(components[0].size());
  for (std::size_t k = 0; k < kComponents; ++k) {
    if (weights(static_cast<Index>(k)) != 0.0) out += weights(static_cast<Index>(k)) * components[k];
  }
  return out;
}

ad::Var fuseVar(const std::array<ad::Var, kComponents>& components, const ad::Var& logits,
                const ComponentMask& enabled) {
  using namespace ad;
  std::vector<Var> chosen;
  std::vector<std::size_t> index;
  for (std::size_t k = 0; k < kComponents; ++k) {
    if (!enabled[k]) continue;
    chosen.push_back(element(logits, 0, static_cast<Index>(k)));
    index.push_back(k);
  }
  if (chosen.empty()) throw Error("fusion-loss", "no component enabled");
  const Var weights = softmaxRow(concatCols(chosen));
  std::vector<Var> terms;
  for (std::size_t e = 0; e < index.size(); ++e) {
    terms.push_back(mulScalar(components[index[e]], element(weights, 0, static_cast<Index>(e))));
  }
  return sum(terms);
}

double regularization(const Matrix& stdpWeights, const Matrix& prototypes) {
  return stdpWeights.squaredNorm() + prototypes.squaredNorm();
}

ad::Var totalLossVar(const std::vector<int>& labels, const std::vector<Index>& rows, const ad::Var& fused,
                     const Vector& memScore, const Vector& isoScore, double reg, const LossCoefficients& coeffs,
                     LossBreakdown* breakdown) {
  using namespace ad;
  const Var bceTerm = bce(fused, labels, rows, coeffs.clampEps);
  const double mem = bce(column(memScore), labels, rows, coeffs.clampEps).item();
  const double iso = bce(column(isoScore), labels, rows, coeffs.clampEps).item();
  const Var total = addScalar(addScalar(addScalar(bceTerm, coeffs.mem * mem), coeffs.iso * iso), coeffs.reg * reg);
  if (breakdown) *breakdown = {bceTerm.item(), mem, iso, reg, total.item()};
  return total;
}

LossBreakdown totalLoss(const std::vector<int>& labels, const std::vector<Index>& rows, const Vector& fused,
                        const Vector& memScore, const Vector& isoScore, const Matrix& stdpWeights,
                        const Matrix& prototypes, const LossCoefficients& coeffs) {
  LossBreakdown out;
  totalLossVar(labels, rows, column(fused), memScore, isoScore, regularization(stdpWeights, prototypes), coeffs, &out);
  return out;
}

}  // namespace astdp
