#include "astdp/lifgat.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace astdp;

namespace {

SparseGraph randomGraph(std::mt19937_64& rng, Index n, double p) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (unit(rng) < p) edges.emplace_back(i, j);
    }
  }
  return SparseGraph::fromEdges(n, edges, true).withSelfLoops();
}

/// Dense masked-softmax attention, one head at a time.
Matrix denseAttention(const Matrix& q, const Matrix& k, const Matrix& v, const Vector& mod, const SparseGraph& g,
                      Index heads) {
  const Index n = q.rows(), d = q.cols() / heads;
  Matrix out = Matrix::Zero(n, q.cols());
  for (Index m = 0; m < heads; ++m) {
    const Matrix scores = q.middleCols(m * d, d) * k.middleCols(m * d, d).transpose() / std::sqrt(double(d));
    for (Index i = 0; i < n; ++i) {
      Vector w = Vector::Zero(n);
      for (Index j = 0; j < n; ++j) {
        if (g.hasEdge(i, j)) w(j) = std::exp(scores(i, j) * mod(j));
      }
      w /= w.sum();
      out.row(i).segment(m * d, d) = w.transpose() * v.middleCols(m * d, d);
    }
  }
  return out;
}

SpikeSummary allOnsetOne(Index n, Index h) { return {Matrix::Ones(n, h), IntMatrix::Ones(n, h)}; }

}  // namespace

TEST_CASE("edge-softmax attention equals dense masked attention") {
  std::mt19937_64 rng(1);
  const SparseGraph g = randomGraph(rng, 9, 0.3);
  const Matrix q = testing::gaussian(rng, 9, 6), k = testing::gaussian(rng, 9, 6), v = testing::gaussian(rng, 9, 6);
  const Vector mod = Vector::Random(9).array() + 1.5;
  const Matrix sparse =
      sparseAttention(ad::Var(q), ad::Var(k), ad::Var(v), ad::Var(Matrix(mod)), g, 3).value();
  CHECK((sparse - denseAttention(q, k, v, mod, g, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention weights form a distribution over each neighbourhood") {
  std::mt19937_64 rng(2);
  const SparseGraph g = randomGraph(rng, 10, 0.25);
  const LifgatWeights w = initLifgat(8, 2, rng);
  const Matrix h = testing::gaussian(rng, 10, 8);
  const AttentionTable t = attentionWeights(h, g, w, Vector::Ones(10), 2);
  CHECK(t.weights.minCoeff() >= 0.0);
  for (Index i = 0; i < 10; ++i) {
    for (Index m = 0; m < 2; ++m) {
      double s = 0.0;
      for (Index e = t.graph.rowOffsets()[i]; e < t.graph.rowOffsets()[i + 1]; ++e) s += t.weights(e, m);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // Zero modulation removes all preference: uniform over neighbours.
  const AttentionTable flat = attentionWeights(h, g, w, Vector::Zero(10), 2);
  for (Index i = 0; i < 10; ++i) {
    for (Index e = flat.graph.rowOffsets()[i]; e < flat.graph.rowOffsets()[i + 1]; ++e) {
      CHECK(flat.weights(e, 0) == doctest::Approx(1.0 / double(flat.graph.degree(i))));
    }
  }
}

TEST_CASE("attention backward matches central differences") {
  std::mt19937_64 rng(3);
  const SparseGraph g = randomGraph(rng, 6, 0.4);
  std::vector<Matrix> in{testing::gaussian(rng, 6, 4), testing::gaussian(rng, 6, 4), testing::gaussian(rng, 6, 4),
                         Matrix(Vector::Random(6).array() + 1.5)};
  const Matrix weights = testing::gaussian(rng, 6, 4);
  const auto value = [&](const std::vector<Matrix>& x) {
    return sparseAttention(ad::Var(x[0]), ad::Var(x[1]), ad::Var(x[2]), ad::Var(x[3]), g, 2)
        .value()
        .cwiseProduct(weights)
        .sum();
  };
  ad::Tape tape;
  std::vector<ad::Var> p;
  for (const auto& m : in) p.push_back(tape.parameter(m));
  const ad::Var out = sparseAttention(p[0], p[1], p[2], p[3], g, 2);
  tape.backward(ad::rowMean(ad::transpose(ad::rowMean(ad::mul(out, ad::Var(weights))))));
  const double scaleBack = static_cast<double>(weights.size());
  for (std::size_t a = 0; a < in.size(); ++a) {
    const Matrix grad = p[a].grad() * scaleBack;
    for (Index k = 0; k < in[a].size(); ++k) {
      const double orig = in[a].data()[k], h = 1e-6;
      in[a].data()[k] = orig + h;
      const double up = value(in);
      in[a].data()[k] = orig - h;
      const double down = value(in);
      in[a].data()[k] = orig;
      CHECK(grad.data()[k] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("pass-through layer integrates the aggregate with the membrane decay") {
  std::mt19937_64 rng(4);
  const SparseGraph g = randomGraph(rng, 7, 0.3);
  const LifgatWeights w = initLifgat(4, 2, rng);
  const Matrix h = testing::gaussian(rng, 7, 4);
  LifgatParams p;
  p.heads = 2;
  p.steps = 5;
  p.passThrough = true;
  const SpikeSummary summary = allOnsetOne(7, 4);
  const LayerOutput out = layerForward(h, g, summary, w, p);

  const Vector mod = modulationFactor(summary, w.countGain(0, 0), 1);
  CHECK((mod.array() - 2.0).abs().maxCoeff() < 1e-7);
  const Matrix agg = denseAttention(h * w.query, h * w.key, h * w.value, mod, g, 2);
  const double decay = std::exp(-1.0 / p.tauMem);
  double c = 0.0;
  for (int t = 1; t <= 5; ++t) c += (1.0 - std::pow(decay, t)) / (1.0 - decay);
  const Matrix expected = (c / 5.0 * agg * w.out).rowwise() + w.outBias.row(0);
  CHECK((out.hidden - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("nodes whose inputs have not spiked yet contribute nothing to the logits") {
  SpikeSummary s{Matrix::Constant(3, 2, 4.0), IntMatrix::Ones(3, 2)};
  s.firstSpike.row(0).setConstant(1.0);
  const Vector early = modulationFactor(s, 1.0, 2);
  CHECK(early(0) > 0.0);
  CHECK(early(1) == 0.0);
  const Vector late = modulationFactor(s, 1.0, 4);
  CHECK(late.minCoeff() > 0.0);
}

TEST_CASE("spiking layer output rates lie in the affine image of [0,1]") {
  std::mt19937_64 rng(5);
  const SparseGraph g = randomGraph(rng, 8, 0.3);
  LifgatWeights w = initLifgat(8, 4, rng);
  w.out = Matrix::Identity(8, 8);
  const LayerOutput out = layerForward(testing::gaussian(rng, 8, 8, 3.0), g, allOnsetOne(8, 8), w, LifgatParams{});
  CHECK(out.hidden.minCoeff() >= 0.0);
  CHECK(out.hidden.maxCoeff() <= 1.0);
  CHECK(out.spikeRate >= 0.0);
  CHECK(out.spikeRate <= 1.0);
}

TEST_CASE("head count must divide the width") {
  LifgatParams p;
  p.heads = 3;
  CHECK_THROWS_AS(p.validate(8), Error);
  CHECK_NOTHROW(p.validate(9));
}
