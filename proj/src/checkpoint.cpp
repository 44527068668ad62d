#include "astdp/checkpoint.hpp"

#include <sstream>

namespace astdp {

namespace {

constexpr const char* kComponent = "checkpoint";

Json vectorToJson(const Vector& v) { return matrixToJson(v); }

Vector vectorFromJson(const Json& j) {
  const Matrix m = matrixFromJson(j);
  if (m.cols() != 1 && m.size() != 0) throw Error(kComponent, "expected a column vector");
  return m.size() == 0 ? Vector() : Vector(m.col(0));
}

Json momentsToJson(const std::map<std::string, Matrix>& moments) {
  Json out = Json::object();
  for (const auto& [name, m] : moments) out[name] = matrixToJson(m);
  return out;
}

std::map<std::string, Matrix> momentsFromJson(const Json& j) {
  std::map<std::string, Matrix> out;
  for (const auto& item : j.items()) out[item.key()] = matrixFromJson(item.value());
  return out;
}

Matrix sameShape(const Json& j, const Matrix& like, const std::string& name) {
  Matrix m = matrixFromJson(j);
  if (m.rows() != like.rows() || m.cols() != like.cols()) {
    throw Error(kComponent, "parameter '" + name + "' has the wrong shape");
  }
  return m;
}

}  // namespace

Json checkpointToJson(const Model& model, const TrainerState& state) {
  Json params = Json::object();
  forEachParam([&](const std::string& name, const Matrix& m) { params[name] = matrixToJson(m); },
               const_cast<ModelParams&>(model.params));
  const PrototypeMemory& mem = model.memory;
  std::ostringstream rng;
  rng << state.rng;
  return {
      {"format", "astdp-checkpoint"},
      {"version", kCheckpointVersion},
      {"config", toJson(model.config)},
      {"params", std::move(params)},
      {"memory",
       {{"prototypes", matrixToJson(mem.prototypes)},
        {"strength", vectorToJson(mem.strength)},
        {"homeostasis", vectorToJson(mem.homeostasis)},
        {"kernels", matrixToJson(mem.kernels)},
        {"absorbed", vectorToJson(mem.absorbed)},
        {"seeded", mem.seeded}}},
      {"stdpWeights", matrixToJson(model.stdpWeights)},
      {"poolProj", matrixToJson(model.poolProj)},
      {"optimizer",
       {{"firstMoment", momentsToJson(state.adam.firstMoment)},
        {"secondMoment", momentsToJson(state.adam.secondMoment)},
        {"step", state.adam.step}}},
      {"epoch", state.epoch},
      {"bestValLoss", realToJson(state.bestValLoss)},
      {"lr", realToJson(state.lr)},
      {"schedulerBest", realToJson(state.schedulerBest)},
      {"schedulerBad", state.schedulerBad},
      {"stopBad", state.stopBad},
      {"rng", rng.str()},
  };
}

Checkpoint checkpointFromJson(const Json& j) {
  try {
    if (j.value("format", std::string()) != "astdp-checkpoint") throw Error(kComponent, "not a checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw Error(kComponent, "unsupported checkpoint version");
    ModelConfig config;
    overlay(j.at("config"), config);
    Checkpoint c;
    c.model = Model::create(config, 0);
    const Json& params = j.at("params");
    std::size_t seen = 0;
    forEachParam(
        [&](const std::string& name, Matrix& m) {
          if (!params.contains(name)) throw Error(kComponent, "missing parameter '" + name + "'");
          m = sameShape(params.at(name), m, name);
          ++seen;
        },
        c.model.params);
    if (seen != params.size()) throw Error(kComponent, "unexpected parameters in checkpoint");

    const Json& mem = j.at("memory");
    PrototypeMemory& memory = c.model.memory;
    memory.prototypes = matrixFromJson(mem.at("prototypes"));
    memory.strength = vectorFromJson(mem.at("strength"));
    memory.homeostasis = vectorFromJson(mem.at("homeostasis"));
    memory.kernels = sameShape(mem.at("kernels"), memory.kernels, "memory.kernels");
    memory.absorbed = vectorFromJson(mem.at("absorbed"));
    memory.seeded = mem.at("seeded").get<bool>();
    c.model.stdpWeights = sameShape(j.at("stdpWeights"), c.model.stdpWeights, "stdpWeights");
    c.model.poolProj = sameShape(j.at("poolProj"), c.model.poolProj, "poolProj");

    TrainerState& s = c.state;
    const Json& opt = j.at("optimizer");
    s.adam.firstMoment = momentsFromJson(opt.at("firstMoment"));
    s.adam.secondMoment = momentsFromJson(opt.at("secondMoment"));
    s.adam.step = opt.at("step").get<long>();
    s.epoch = j.at("epoch").get<int>();
    s.bestValLoss = realFromJson(j.at("bestValLoss"));
    s.lr = realFromJson(j.at("lr"));
    s.schedulerBest = realFromJson(j.at("schedulerBest"));
    s.schedulerBad = j.at("schedulerBad").get<int>();
    s.stopBad = j.at("stopBad").get<int>();
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> s.rng;
    if (!rng) throw Error(kComponent, "malformed generator state");
    return c;
  } catch (const Json::exception& e) {
    throw Error(kComponent, e.what());
  }
}

void saveCheckpoint(const std::filesystem::path& path, const Model& model, const TrainerState& state) {
  writeJson(path, checkpointToJson(model, state));
}

Checkpoint loadCheckpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(kComponent, "checkpoint not found: " + path.string());
  return checkpointFromJson(readJson(path));
}

}  // namespace astdp
