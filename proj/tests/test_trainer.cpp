#include "astdp/trainer.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace astdp;

namespace {

ModelConfig smallConfig(Index features = 4) {
  ModelConfig c;
  c.featureDim = features;
  c.hidden = 8;
  c.layers = 1;
  c.midWidth = 4;
  c.lif.steps = 5;
  c.attention.heads = 2;
  c.memory.prototypes = 3;
  c.kernels = {1, 3};
  return c;
}

LabeledDataset splitDataset(std::uint64_t seed) {
  LabeledDataset d = testing::tinyDataset(seed, 16);
  for (Index i = 0; i < 16; ++i) d.split[std::size_t(i)] = i < 10 ? Split::Train : i < 13 ? Split::Val : Split::Test;
  return d;
}

bool sameParams(const ModelParams& a, const ModelParams& b) {
  bool same = true;
  forEachParam([&](const std::string&, Matrix& x, Matrix& y) { same = same && x == y; }, const_cast<ModelParams&>(a),
               const_cast<ModelParams&>(b));
  return same;
}

}  // namespace

TEST_CASE("plateau scheduler halves after patience+1 flat epochs") {
  PlateauScheduler s(2e-4, 0.5, 10);
  CHECK(s.step(1.0) == 2e-4);
  for (int k = 0; k < 10; ++k) CHECK(s.step(1.0) == 2e-4);
  CHECK(s.step(1.0) == 1e-4);
  for (int k = 0; k < 10; ++k) s.step(1.0);
  CHECK(s.step(1.0) == doctest::Approx(2e-4 * 0.25));
  CHECK(s.step(0.5) == doctest::Approx(5e-5));
  CHECK(s.bad() == 0);
}

TEST_CASE("early stopping fires after patience epochs without improvement") {
  EarlyStopping e(3);
  CHECK(e.update(1.0));
  CHECK_FALSE(e.update(1.0));
  CHECK_FALSE(e.update(2.0));
  CHECK_FALSE(e.shouldStop());
  CHECK(e.update(0.9));
  for (int k = 0; k < 3; ++k) e.update(0.9);
  CHECK(e.shouldStop());
}

TEST_CASE("gradient clipping bounds the global norm") {
  std::map<std::string, Matrix> g{{"a", Matrix::Constant(2, 2, 3.0)}, {"b", Matrix::Constant(1, 1, 4.0)}};
  const double norm = clipGradNorm(g, 1.0);
  CHECK(norm == doctest::Approx(std::sqrt(36.0 + 16.0)));
  double after = 0.0;
  for (const auto& [k, m] : g) after += m.squaredNorm();
  CHECK(std::sqrt(after) <= 1.0);
  CHECK(std::sqrt(after) == doctest::Approx(1.0).epsilon(1e-5));
  std::map<std::string, Matrix> small{{"a", Matrix::Constant(1, 1, 0.1)}};
  clipGradNorm(small, 1.0);
  CHECK(small["a"](0, 0) == 0.1);
}

TEST_CASE("AdamW step matches the decoupled update by hand") {
  Model m = Model::create(smallConfig(), 1);
  const Matrix before = m.params.fusion.logits = (Matrix(1, 5) << 0.1, -0.2, 0.3, 0.0, 0.5).finished();
  const Matrix grad = (Matrix(1, 5) << 1.0, -2.0, 0.5, 0.0, 3.0).finished();
  const ModelParams original = m.params;
  TrainConfig c;
  AdamState state;
  adamwStep(m.params, {{"fusion.logits", grad}}, state, c, 0.01);
  for (Index k = 0; k < 5; ++k) {
    const double mHat = (1 - c.adamBeta1) * grad(k) / (1 - c.adamBeta1);
    const double vHat = (1 - c.adamBeta2) * grad(k) * grad(k) / (1 - c.adamBeta2);
    const double expected = before(k) * (1 - 0.01 * c.weightDecay) - 0.01 * mHat / (std::sqrt(vHat) + c.adamEps);
    CHECK(m.params.fusion.logits(k) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(state.step == 1);
  m.params.fusion.logits = original.fusion.logits;
  CHECK(sameParams(m.params, original));
}

TEST_CASE("zero learning rate without plasticity leaves the model untouched") {
  const LabeledDataset d = splitDataset(1);
  Model m = Model::create(smallConfig(), 2);
  seedMemory(m, d.features.values, d.nodesIn(Split::Train));
  const Model before = m;
  TrainConfig c;
  c.learningRate = 0.0;
  c.plasticity = false;
  TrainerState s = initialState(c);
  trainEpoch(m, s, d, c);
  CHECK(sameParams(m.params, before.params));
  CHECK(m.stdpWeights == before.stdpWeights);
  CHECK(m.memory.prototypes == before.memory.prototypes);
}

TEST_CASE("plastic state changes only through its own rules") {
  const LabeledDataset d = splitDataset(2);
  TrainConfig c;
  c.learningRate = 0.0;
  Model m = Model::create(smallConfig(), 3);
  seedMemory(m, d.features.values, d.nodesIn(Split::Train));
  const Model before = m;
  TrainerState s = initialState(c);
  trainEpoch(m, s, d, c);
  CHECK(sameParams(m.params, before.params));
  CHECK(m.stdpWeights != before.stdpWeights);
  CHECK(m.memory.strength != before.memory.strength);

  ModelConfig off = smallConfig();
  off.toggles.disable("stdp");
  Model n = Model::create(off, 3);
  const Matrix w = n.stdpWeights;
  TrainerState s2 = initialState(c);
  trainEpoch(n, s2, d, c);
  CHECK(n.stdpWeights == w);
}

TEST_CASE("a flat validation loss stops after patience+1 epochs") {
  const LabeledDataset d = splitDataset(3);
  Model m = Model::create(smallConfig(), 4);
  TrainConfig c;
  c.learningRate = 0.0;
  c.plasticity = false;
  c.earlyStopPatience = 4;
  c.maxEpochs = 50;
  const FitResult fit = fitWithEarlyStopping(m, d, c);
  CHECK(fit.history.size() == 5);
  CHECK(fit.bestEpoch == 1);
  CHECK(fit.state.stopBad == 4);
}

TEST_CASE("minibatches take one optimiser step per batch") {
  const LabeledDataset d = splitDataset(4);
  Model m = Model::create(smallConfig(), 5);
  TrainConfig c;
  c.batchNodes = 3;
  TrainerState s = initialState(c);
  trainEpoch(m, s, d, c);
  CHECK(s.adam.step == 4);
  CHECK(s.epoch == 1);
}

TEST_CASE("training is reproducible for a fixed seed") {
  const LabeledDataset d = splitDataset(5);
  TrainConfig c;
  c.maxEpochs = 3;
  c.batchNodes = 4;
  Model a = Model::create(smallConfig(), 6), b = Model::create(smallConfig(), 6);
  const FitResult fa = fitWithEarlyStopping(a, d, c), fb = fitWithEarlyStopping(b, d, c);
  REQUIRE(fa.history.size() == fb.history.size());
  for (std::size_t k = 0; k < fa.history.size(); ++k) {
    CHECK(fa.history[k].trainLoss == fb.history[k].trainLoss);
    CHECK(fa.history[k].valLoss == fb.history[k].valLoss);
  }
  CHECK(sameParams(a.params, b.params));
}

TEST_CASE("large graphs train on one-hop neighbourhoods of each batch") {
  const LabeledDataset d = splitDataset(6);
  TrainConfig c;
  c.fullGraphLimit = 4;
  c.batchNodes = 5;
  Model m = Model::create(smallConfig(), 7);
  TrainerState s = initialState(c);
  const EpochMetrics e = trainEpoch(m, s, d, c);
  CHECK(std::isfinite(e.trainLoss));
  CHECK(s.adam.step == 2);
}

TEST_CASE("configuration errors are rejected") {
  TrainConfig c;
  c.maxEpochs = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.plateauFactor = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  ModelConfig m = smallConfig();
  m.kernels = {11};
  CHECK_THROWS_AS(m.validate(), Error);
  ComponentToggles t;
  CHECK_THROWS_AS(t.disable("bogus"), Error);
  t.disable("mstc");
  CHECK(t.disabled() == std::vector<std::string>{"mstc"});
  CHECK_FALSE(t.mask()[Temp]);
}

TEST_CASE("disabled scorers report a neutral constant") {
  const LabeledDataset d = splitDataset(7);
  ModelConfig c = smallConfig();
  for (const char* name : {"edhmm", "srcgp", "mstc", "uncert"}) c.toggles.disable(name);
  const Model m = Model::create(c, 8);
  const ForwardResult r = forwardPass(m, d.features.values, d.graph);
  CHECK(r.scores.mem == Vector::Constant(16, 0.5));
  CHECK(r.scores.iso == Vector::Constant(16, 0.5));
  CHECK(r.scores.temp == Vector::Constant(16, 0.5));
  CHECK(r.scores.uncert == Vector::Constant(16, 0.5));
  CHECK((r.scores.fused - r.scores.pred).cwiseAbs().maxCoeff() < 1e-15);
}
