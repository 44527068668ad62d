#pragma once

#include "astdp/edhmm.hpp"
#include "astdp/fusion.hpp"
#include "astdp/graph.hpp"
#include "astdp/lifgat.hpp"
#include "astdp/mstc.hpp"
#include "astdp/srcgp.hpp"
#include "astdp/stdp.hpp"
#include "astdp/tsge.hpp"

#include <string>
#include <vector>

namespace astdp {

/// Pipeline stages that can be switched off for ablations. A disabled scoring
/// stage reports a constant 0.5 and drops out of the fusion weights; a
/// disabled attention stack passes the projected features through.
struct ComponentToggles {
  bool lifgat = true;
  bool edhmm = true;
  bool srcgp = true;
  bool stdp = true;
  bool mstc = true;
  bool uncert = true;

  ComponentMask mask() const { return {true, edhmm, srcgp, mstc, uncert}; }
  /// Switches one stage off by name; throws on an unknown name.
  void disable(const std::string& name);
  std::vector<std::string> disabled() const;
};

struct ModelConfig {
  Index featureDim = 32;
  Index hidden = 128;
  Index layers = 3;
  Index midWidth = 64;
  LifParams lif;
  LifgatParams attention;
  MemoryParams memory;
  PoolingParams pooling;
  StdpParams stdp;
  std::vector<int> kernels{3, 5, 7};
  ComponentToggles toggles;
  ad::SurrogateSpec surrogate;
  LossCoefficients loss;

  void validate() const;
};

template <typename T>
struct ModelParamsT {
  TsgeWeightsT<T> tsge;
  std::vector<LifgatWeightsT<T>> lifgat;
  MstcWeightsT<T> mstc;
  FusionWeightsT<T> fusion;
};

using ModelParams = ModelParamsT<Matrix>;
using ModelVars = ModelParamsT<ad::Var>;

template <typename F, typename First, typename... Rest>
void forEachParam(F&& f, ModelParamsT<First>& p, ModelParamsT<Rest>&... rest) {
  forEachParam(f, p.tsge, rest.tsge...);
  for (std::size_t l = 0; l < p.lifgat.size(); ++l) {
    forEachParam(f, "lifgat" + std::to_string(l), p.lifgat[l], rest.lifgat[l]...);
  }
  forEachParam(f, p.mstc, rest.mstc...);
  forEachParam(f, p.fusion, rest.fusion...);
}

struct Model {
  ModelConfig config;
  ModelParams params;
  PrototypeMemory memory;
  Matrix stdpWeights;
  /// Projection of pooled rates; diagnostic only.
  Matrix poolProj;

  static Model create(const ModelConfig& config, std::uint64_t seed);
};

/// Same-shaped variables for every parameter: tape parameters when `tape` is
/// given, constants otherwise.
ModelVars bindParams(const ModelParams& params, ad::Tape* tape);

struct ForwardResult {
  AnomalyScoreVector scores;
  Encoding encoding;
  Matrix attention;
  Matrix temporal;
  Matrix memoryInput;
  std::vector<Index> assignment;
  Vector rawMemory;
  Irregularity irregularity;
  Vector rawIsolation;
  Selection selection;
  Matrix pooled;
  Matrix stdpOutput;
  Vector stdpStrength;
  double attentionSpikeRate = 0.0;
  double spikeDensity = 0.0;
};

struct ForwardVars {
  ad::Var fused;
  ForwardResult result;
};

/// Full pipeline on one graph window. `graph` is used as given; self-loops
/// are added when missing. An unseeded memory is seeded from this window.
ForwardVars forwardVars(const Model& model, const ModelVars& vars, const Matrix& x, const SparseGraph& graph,
                        const ad::SurrogateSpec& surrogate);

ForwardResult forwardPass(const Model& model, const Matrix& x, const SparseGraph& graph);

/// Seeds the prototype memory from the representation of `nodes`.
void seedMemory(Model& model, const Matrix& x, const std::vector<Index>& nodes);

}  // namespace astdp
