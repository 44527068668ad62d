#include "astdp/tsge.hpp"

#include <Eigen/QR>

#include <cmath>

namespace astdp {

namespace {

struct VarState {
  ad::Var membrane;
  ad::Var current;
  ad::Var adaptOffset;
};

ad::Var stepVars(VarState& s, const ad::Var& projected, const TsgeVars& w, const LifParams& p,
                 const ad::SurrogateSpec& surrogate, Matrix* thresholdUsed) {
  using namespace ad;
  const double invT = 1.0 / static_cast<double>(p.steps);
  s.current = scale(s.current, p.alpha()) + scale(matmul(projected, w.recurrent), invT);
  s.membrane = scale(s.membrane, p.beta()) + mulRow(s.current, w.synapticScale);
  const Var threshold = addRow(s.adaptOffset, scale(w.adaptGain, p.threshold));
  if (thresholdUsed) *thresholdUsed = threshold.value();
  Var spikes = spike(s.membrane, threshold, surrogate);
  s.membrane = mul(s.membrane, oneMinus(spikes));
  s.adaptOffset = scale(s.adaptOffset, p.adaptDecay) + scale(spikes, p.adaptIncrement);
  if (!s.membrane.value().allFinite() || !s.current.value().allFinite()) {
    throw Error("tsge", "non-finite LIF state");
  }
  return spikes;
}

}  // namespace

void LifParams::validate() const {
  if (!(tauSyn > 0) || !(tauMem > 0) || !(threshold > 0)) {
    throw Error("tsge", "time constants and threshold must be positive");
  }
  if (!(adaptDecay > 0 && adaptDecay < 1)) throw Error("tsge", "adaptDecay must lie in (0,1)");
  if (adaptIncrement < 0) throw Error("tsge", "adaptIncrement must be non-negative");
  if (steps < 1) throw Error("tsge", "steps must be positive");
}

Matrix semiOrthogonal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index big = std::max(rows, cols), small = std::min(rows, cols);
  Matrix g(big, small);
  for (Index j = 0; j < small; ++j) {
    for (Index i = 0; i < big; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(big, small);
  // Sign fix so the draw is Haar-distributed.
  for (Index j = 0; j < small; ++j) {
    if (qr.matrixQR()(j, j) < 0) q.col(j) = -q.col(j);
  }
  return rows >= cols ? q : Matrix(q.transpose());
}

TsgeWeights initTsge(Index featureDim, Index hidden, std::mt19937_64& rng) {
  if (featureDim < 1 || hidden < 1) throw Error("tsge", "dimensions must be positive");
  TsgeWeights w;
  w.projection = semiOrthogonal(featureDim, hidden, rng);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
  w.recurrent = Matrix(hidden, hidden);
  for (Index j = 0; j < hidden; ++j) {
    for (Index i = 0; i < hidden; ++i) w.recurrent(i, j) = normal(rng);
  }
  w.synapticScale = Matrix::Ones(1, hidden);
  w.adaptGain = Matrix::Ones(1, hidden);
  return w;
}

LifState LifState::zeros(Index nodes, Index hidden) {
  return {Matrix::Zero(nodes, hidden), Matrix::Zero(nodes, hidden), Matrix::Zero(nodes, hidden)};
}

Matrix project(const Matrix& x, const Matrix& projection) {
  if (x.cols() != projection.rows()) throw Error("tsge", "project: feature dimension mismatch");
  return x * projection;
}

Matrix project(const FeatureMatrix& x, const Matrix& projection) { return project(x.values, projection); }

LifStepResult lifStep(LifState& state, const Matrix& drive, const LifParams& params,
                      const TsgeWeights& weights) {
  const TsgeVars w{ad::Var(weights.projection), ad::Var(weights.recurrent), ad::Var(weights.synapticScale),
                   ad::Var(weights.adaptGain)};
  VarState s{ad::Var(state.membrane), ad::Var(state.current), ad::Var(state.adaptOffset)};
  LifStepResult out;
  out.spikes = stepVars(s, ad::Var(drive), w, params, {}, &out.threshold).value();
  state = {s.membrane.value(), s.current.value(), s.adaptOffset.value()};
  return out;
}

Encoding encode(const Matrix& x, const LifParams& params, const TsgeWeights& weights) {
  const TsgeVars w{ad::Var(weights.projection), ad::Var(weights.recurrent), ad::Var(weights.synapticScale),
                   ad::Var(weights.adaptGain)};
  auto run = encodeVars(x, w, params, {});
  return {std::move(run.tensor), std::move(run.summary)};
}

EncodedVars encodeVars(const Matrix& x, const TsgeVars& weights, const LifParams& params,
                       const ad::SurrogateSpec& surrogate) {
  params.validate();
  if (!x.allFinite()) throw Error("tsge", "input features must be finite");
  if (x.cols() != weights.projection.rows()) throw Error("tsge", "project: feature dimension mismatch");
  const Index n = x.rows(), h = weights.projection.cols();
  EncodedVars out;
  out.projected = ad::matmul(ad::Var(x), weights.projection);
  out.tensor = SpikeTensor(n, params.steps, h);
  VarState s{ad::Var(Matrix::Zero(n, h)), ad::Var(Matrix::Zero(n, h)), ad::Var(Matrix::Zero(n, h))};
  out.steps.reserve(static_cast<std::size_t>(params.steps));
  for (Index t = 0; t < params.steps; ++t) {
    out.steps.push_back(stepVars(s, out.projected, weights, params, surrogate, nullptr));
    out.tensor.setStep(t, out.steps.back().value());
  }
  out.summary = summarize(out.tensor);
  return out;
}

}  // namespace astdp
