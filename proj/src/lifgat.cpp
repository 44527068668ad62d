#include "astdp/lifgat.hpp"

#include <cmath>

namespace astdp {

namespace {

constexpr double kEps = 1e-8;

Matrix gaussian(Index rows, Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Matrix onsetMask(const Vector& meanOnset, Index step) {
  Matrix mask(meanOnset.size(), 1);
  for (Index j = 0; j < meanOnset.size(); ++j) mask(j, 0) = meanOnset(j) <= static_cast<double>(step) ? 1.0 : 0.0;
  return mask;
}

ad::Var modulationVar(const Modulation& mod, const ad::Var& gain, const Matrix& mask) {
  using namespace ad;
  const Var share(Matrix(mod.countShare));
  return mul(Var(mask), addScalar(mulScalar(share, gain), 1.0));
}

}  // namespace

void LifgatParams::validate(Index hidden) const {
  if (heads < 1 || hidden % heads != 0) throw Error("lifgat", "hidden width must be divisible by heads");
  if (!(tauMem > 0)) throw Error("lifgat", "tauMem must be positive");
  if (steps < 1) throw Error("lifgat", "steps must be positive");
}

LifgatWeights initLifgat(Index hidden, Index heads, std::mt19937_64& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(hidden));
  LifgatWeights w;
  w.query = gaussian(hidden, hidden, sd, rng);
  w.key = gaussian(hidden, hidden, sd, rng);
  w.value = gaussian(hidden, hidden, sd, rng);
  w.out = gaussian(hidden, hidden, sd, rng);
  w.outBias = Matrix::Zero(1, hidden);
  w.countGain = Matrix::Constant(1, 1, 1.0);
  w.lateral = Matrix::Constant(1, heads, 0.1);
  return w;
}

Modulation modulationInputs(const SpikeSummary& summary) {
  const Vector meanCount = summary.counts.cast<double>().rowwise().mean();
  const double maxCount = meanCount.size() ? meanCount.maxCoeff() : 0.0;
  return {meanCount / (maxCount + kEps), summary.firstSpike.rowwise().mean()};
}

Vector modulationFactor(const SpikeSummary& summary, double countGain, Index step) {
  const Modulation mod = modulationInputs(summary);
  const Matrix mask = onsetMask(mod.meanOnset, step);
  return (1.0 + countGain * mod.countShare.array()).matrix().cwiseProduct(mask.col(0));
}

ad::Var sparseAttention(const ad::Var& query, const ad::Var& key, const ad::Var& value,
                        const ad::Var& modulation, const SparseGraph& graph, Index heads) {
  const Index n = graph.numNodes(), h = query.cols(), d = h / heads;
  if (query.rows() != n || key.rows() != n || value.rows() != n || modulation.rows() != n) {
    throw Error("lifgat", "attention inputs do not match the graph size");
  }
  const double invSqrtD = 1.0 / std::sqrt(static_cast<double>(d));
  const auto& offsets = graph.rowOffsets();
  const auto& cols = graph.colIndices();
  const Matrix& q = query.value();
  const Matrix& k = key.value();
  const Matrix& v = value.value();
  const Matrix& gam = modulation.value();

  Matrix out = Matrix::Zero(n, h);
  Matrix raw(graph.numEdges(), heads);
  Matrix att(graph.numEdges(), heads);
  for (Index i = 0; i < n; ++i) {
    const Index begin = offsets[i], end = offsets[i + 1];
    if (begin == end) throw Error("lifgat", "node without neighbours or self-loop");
    for (Index m = 0; m < heads; ++m) {
      double best = -std::numeric_limits<double>::infinity();
      for (Index e = begin; e < end; ++e) {
        const Index j = cols[e];
        raw(e, m) = q.row(i).segment(m * d, d).dot(k.row(j).segment(m * d, d)) * invSqrtD;
        att(e, m) = raw(e, m) * gam(j, 0);
        best = std::max(best, att(e, m));
      }
      double z = 0.0;
      for (Index e = begin; e < end; ++e) {
        att(e, m) = std::exp(att(e, m) - best);
        z += att(e, m);
      }
      for (Index e = begin; e < end; ++e) {
        att(e, m) /= z;
        out.row(i).segment(m * d, d) += att(e, m) * v.row(cols[e]).segment(m * d, d);
      }
    }
  }

  return ad::Tape::apply(
      std::move(out), {&query, &key, &value, &modulation},
      [query, key, value, modulation, graph, heads, d, invSqrtD, raw = std::move(raw),
       att = std::move(att)](const Matrix& g) {
        const Index n = graph.numNodes(), h = query.cols();
        const auto& offsets = graph.rowOffsets();
        const auto& cols = graph.colIndices();
        const Matrix& q = query.value();
        const Matrix& k = key.value();
        const Matrix& v = value.value();
        const Matrix& gam = modulation.value();
        Matrix gq = Matrix::Zero(n, h), gk = Matrix::Zero(n, h), gv = Matrix::Zero(n, h);
        Matrix gg = Matrix::Zero(n, 1);
        std::vector<double> dA;
        for (Index i = 0; i < n; ++i) {
          const Index begin = offsets[i], end = offsets[i + 1];
          dA.resize(static_cast<std::size_t>(end - begin));
          for (Index m = 0; m < heads; ++m) {
            const auto gi = g.row(i).segment(m * d, d);
            double weighted = 0.0;
            for (Index e = begin; e < end; ++e) {
              const Index j = cols[e];
              dA[e - begin] = gi.dot(v.row(j).segment(m * d, d));
              weighted += att(e, m) * dA[e - begin];
              gv.row(j).segment(m * d, d) += att(e, m) * gi;
            }
            for (Index e = begin; e < end; ++e) {
              const Index j = cols[e];
              const double dLogit = att(e, m) * (dA[e - begin] - weighted);
              gg(j, 0) += dLogit * raw(e, m);
              const double dRaw = dLogit * gam(j, 0) * invSqrtD;
              gq.row(i).segment(m * d, d) += dRaw * k.row(j).segment(m * d, d);
              gk.row(j).segment(m * d, d) += dRaw * q.row(i).segment(m * d, d);
            }
          }
        }
        query.node().addGrad(gq);
        key.node().addGrad(gk);
        value.node().addGrad(gv);
        modulation.node().addGrad(gg);
      });
}

AttentionTable attentionWeights(const Matrix& hin, const SparseGraph& graph, const LifgatWeights& weights,
                                const Vector& modulation, Index heads) {
  const SparseGraph g = graph.includesSelfLoops() ? graph : graph.withSelfLoops();
  const Matrix q = hin * weights.query, k = hin * weights.key;
  const Index d = q.cols() / heads;
  const double invSqrtD = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix w(g.numEdges(), heads);
  for (Index i = 0; i < g.numNodes(); ++i) {
    const Index begin = g.rowOffsets()[i], end = g.rowOffsets()[i + 1];
    for (Index m = 0; m < heads; ++m) {
      double best = -std::numeric_limits<double>::infinity();
      for (Index e = begin; e < end; ++e) {
        const Index j = g.colIndices()[e];
        w(e, m) = q.row(i).segment(m * d, d).dot(k.row(j).segment(m * d, d)) * invSqrtD * modulation(j);
        best = std::max(best, w(e, m));
      }
      double z = 0.0;
      for (Index e = begin; e < end; ++e) z += (w(e, m) = std::exp(w(e, m) - best));
      for (Index e = begin; e < end; ++e) w(e, m) /= z;
    }
  }
  return {g, w};
}

ad::Var layerForwardVars(const ad::Var& hin, const SparseGraph& graph, const SpikeSummary& summary,
                         const LifgatVars& weights, const LifgatParams& params,
                         const ad::SurrogateSpec& surrogate, double* spikeRate) {
  using namespace ad;
  const Index n = hin.rows(), h = weights.query.cols();
  params.validate(h);
  if (!graph.includesSelfLoops()) throw Error("lifgat", "graph must include self-loops");
  if (summary.firstSpike.rows() != n) throw Error("lifgat", "summary does not match the node count");
  const Index heads = params.heads, d = h / heads;
  const double decay = std::exp(-1.0 / params.tauMem);
  const bool inhibit = params.lateralInhibition && heads > 1 && !params.passThrough;

  const Var q = matmul(hin, weights.query);
  const Var k = matmul(hin, weights.key);
  const Var v = matmul(hin, weights.value);
  const Var threshold = Var::scalar(params.attThreshold);
  const Modulation mod = modulationInputs(summary);

  Var membrane(Matrix::Zero(n, h));
  Var aggregate;
  Matrix lastMask;
  std::vector<Var> spikes;
  double total = 0.0;
  for (Index t = 1; t <= params.steps; ++t) {
    const Matrix mask = onsetMask(mod.meanOnset, t);
    if (!aggregate.defined() || mask != lastMask) {
      aggregate = sparseAttention(q, k, v, modulationVar(mod, weights.countGain, mask), graph, heads);
      lastMask = mask;
    }
    membrane = scale(membrane, decay) + aggregate;
    Var s;
    if (params.passThrough) {
      s = membrane;
    } else if (!inhibit) {
      s = spike(membrane, threshold, surrogate);
      membrane = mul(membrane, oneMinus(s));
    } else {
      std::vector<Var> headMembrane, headSpikes;
      Var lower;
      for (Index m = 0; m < heads; ++m) {
        Var um = sliceCols(membrane, m * d, d);
        if (m > 0) um = um - mulScalar(lower, element(weights.lateral, 0, m));
        Var sm = spike(um, threshold, surrogate);
        lower = m == 0 ? sm : lower + sm;
        headMembrane.push_back(mul(um, oneMinus(sm)));
        headSpikes.push_back(sm);
      }
      membrane = concatCols(headMembrane);
      s = concatCols(headSpikes);
    }
    if (!membrane.value().allFinite()) throw Error("lifgat", "non-finite attention membrane");
    if (!params.passThrough) total += s.value().sum();
    spikes.push_back(s);
  }
  if (spikeRate) *spikeRate = total / static_cast<double>(n * h * params.steps);
  const Var rate = scale(sum(spikes), 1.0 / static_cast<double>(params.steps));
  return addRow(matmul(rate, weights.out), weights.outBias);
}

LayerOutput layerForward(const Matrix& hin, const SparseGraph& graph, const SpikeSummary& summary,
                         const LifgatWeights& weights, const LifgatParams& params) {
  using ad::Var;
  const LifgatVars w{Var(weights.query),  Var(weights.key),       Var(weights.value),  Var(weights.out),
                     Var(weights.outBias), Var(weights.countGain), Var(weights.lateral)};
  const SparseGraph g = graph.includesSelfLoops() ? graph : graph.withSelfLoops();
  LayerOutput out;
  out.hidden = layerForwardVars(Var(hin), g, summary, w, params, {}, &out.spikeRate).value();
  return out;
}

}  // namespace astdp
