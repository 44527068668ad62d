#include "astdp/model.hpp"

#include <algorithm>
#include <cmath>

namespace astdp {

namespace {

const char* const kToggleNames[] = {"lifgat", "edhmm", "srcgp", "stdp", "mstc", "uncert"};

bool* toggleSlot(ComponentToggles& t, const std::string& name) {
  if (name == "lifgat") return &t.lifgat;
  if (name == "edhmm") return &t.edhmm;
  if (name == "srcgp") return &t.srcgp;
  if (name == "stdp") return &t.stdp;
  if (name == "mstc") return &t.mstc;
  if (name == "uncert") return &t.uncert;
  return nullptr;
}

ad::Var constantColumn(Index n, double v) { return ad::Var(Matrix::Constant(n, 1, v)); }

Vector logistic(const Vector& v) { return ad::sigmoid(ad::Var(Matrix(v))).value().col(0); }

}  // namespace

void ComponentToggles::disable(const std::string& name) {
  bool* slot = toggleSlot(*this, name);
  if (!slot) throw Error("cli", "unknown component '" + name + "'");
  *slot = false;
}

std::vector<std::string> ComponentToggles::disabled() const {
  std::vector<std::string> out;
  ComponentToggles copy = *this;
  for (const char* name : kToggleNames) {
    if (!*toggleSlot(copy, name)) out.emplace_back(name);
  }
  return out;
}

void ModelConfig::validate() const {
  if (featureDim < 1 || hidden < 1 || layers < 1 || midWidth < 1) {
    throw Error("trainer", "model dimensions must be positive");
  }
  lif.validate();
  attention.validate(hidden);
  memory.validate();
  pooling.validate();
  stdp.validate();
  for (int k : kernels) {
    if (k < 1 || k % 2 == 0 || k > 2 * lif.steps - 1) throw Error("mstc", "invalid kernel size");
  }
}

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  Model m;
  m.config = config;
  m.params.tsge = initTsge(config.featureDim, config.hidden, rng);
  for (Index l = 0; l < config.layers; ++l) m.params.lifgat.push_back(initLifgat(config.hidden, config.attention.heads, rng));
  m.params.mstc = initMstc(config.hidden, config.kernels, rng);
  m.params.fusion = initFusion(config.hidden, config.midWidth, rng);
  m.memory = PrototypeMemory(config.memory, config.lif.steps, config.hidden);
  m.stdpWeights = initStdp(config.hidden, rng);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.hidden)));
  m.poolProj = Matrix(config.hidden, config.hidden);
  for (Index j = 0; j < config.hidden; ++j) {
    for (Index i = 0; i < config.hidden; ++i) m.poolProj(i, j) = normal(rng);
  }
  return m;
}

ModelVars bindParams(const ModelParams& params, ad::Tape* tape) {
  ModelVars vars;
  vars.lifgat.resize(params.lifgat.size());
  vars.mstc.taps.resize(params.mstc.taps.size());
  for (std::size_t s = 0; s < params.mstc.taps.size(); ++s) vars.mstc.taps[s].resize(params.mstc.taps[s].size());
  vars.mstc.bias.resize(params.mstc.bias.size());
  forEachParam(
      [tape](const std::string&, const Matrix& m, ad::Var& v) { v = tape ? tape->parameter(m) : ad::Var(m); },
      const_cast<ModelParams&>(params), vars);
  return vars;
}

ForwardVars forwardVars(const Model& model, const ModelVars& vars, const Matrix& x, const SparseGraph& graph,
                        const ad::SurrogateSpec& surrogate) {
  using namespace ad;
  const ModelConfig& cfg = model.config;
  const ComponentToggles& on = cfg.toggles;
  if (x.cols() != cfg.featureDim) throw Error("trainer", "feature dimension does not match the model");
  if (graph.numNodes() != x.rows()) throw Error("trainer", "graph and feature row counts differ");
  const Index n = x.rows();
  const SparseGraph looped = graph.includesSelfLoops() ? graph : graph.withSelfLoops();

  ForwardVars out;
  ForwardResult& r = out.result;
  EncodedVars enc = encodeVars(x, vars.tsge, cfg.lif, surrogate);
  r.spikeDensity = spikeDensity(enc.tensor);

  Var attention = enc.projected;
  if (on.lifgat) {
    LifgatParams att = cfg.attention;
    att.steps = cfg.lif.steps;
    double rateSum = 0.0;
    for (const auto& layer : vars.lifgat) {
      double rate = 0.0;
      attention = layerForwardVars(attention, looped, enc.summary, layer, att, surrogate, &rate);
      rateSum += rate;
    }
    r.attentionSpikeRate = rateSum / static_cast<double>(std::max<std::size_t>(1, vars.lifgat.size()));
  }
  r.attention = attention.value();

  r.memoryInput = combinedRepresentation(enc.tensor, model.memory);
  if (on.edhmm) {
    PrototypeMemory seeded;
    const PrototypeMemory* memory = &model.memory;
    if (!model.memory.seeded) {
      seeded = model.memory;
      seedPrototypes(seeded, r.memoryInput);
      memory = &seeded;
    }
    const MemoryScores ms = memoryAnomalyScore(r.memoryInput, matchScores(r.memoryInput, *memory), *memory);
    r.rawMemory = ms.raw;
    r.assignment = ms.assignment;
    r.scores.mem = logistic(ms.raw);
  } else {
    r.scores.mem = Vector::Constant(n, 0.5);
  }

  r.irregularity = irregularityScores(enc.tensor, cfg.pooling);
  if (on.srcgp) {
    r.rawIsolation = isolationScores(r.irregularity.score, r.irregularity.burst);
    r.scores.iso = logistic(r.rawIsolation);
    r.selection = selectTopK(r.irregularity.score, cfg.pooling.ratio);
    r.pooled = pooledFeatures(enc.tensor, r.selection.indices, model.poolProj);
  } else {
    r.scores.iso = Vector::Constant(n, 0.5);
  }

  r.stdpOutput = stdpForward(r.attention, model.stdpWeights);
  r.stdpStrength = stdpStrength(model.stdpWeights);

  Var temporal(Matrix::Zero(n, cfg.hidden));
  Var temp = constantColumn(n, 0.5);
  if (on.mstc) {
    TemporalVars tv = temporalFeatureVars(enc.steps, vars.mstc);
    temporal = tv.hidden;
    temp = tv.score;
  }
  r.temporal = temporal.value();

  const Var pred = predictionVar(attention, temporal, vars.fusion);
  const Var mem(Matrix(r.scores.mem)), iso(Matrix(r.scores.iso));
  const Var uncert = on.uncert ? sigmoid(stdAcross({pred, mem, iso, temp})) : constantColumn(n, 0.5);
  out.fused = fuseVar({pred, mem, iso, temp, uncert}, vars.fusion.logits, on.mask());

  r.scores.pred = pred.value().col(0);
  r.scores.temp = temp.value().col(0);
  r.scores.uncert = uncert.value().col(0);
  r.scores.fused = out.fused.value().col(0);
  r.encoding = {std::move(enc.tensor), std::move(enc.summary)};
  return out;
}

ForwardResult forwardPass(const Model& model, const Matrix& x, const SparseGraph& graph) {
  return forwardVars(model, bindParams(model.params, nullptr), x, graph, model.config.surrogate).result;
}

void seedMemory(Model& model, const Matrix& x, const std::vector<Index>& nodes) {
  const Encoding enc = encode(x, model.config.lif, model.params.tsge);
  const Matrix z = combinedRepresentation(enc.spikes, model.memory);
  Matrix rows(static_cast<Index>(nodes.size()), z.cols());
  for (std::size_t r = 0; r < nodes.size(); ++r) rows.row(static_cast<Index>(r)) = z.row(nodes[r]);
  seedPrototypes(model.memory, rows);
}

}  // namespace astdp
