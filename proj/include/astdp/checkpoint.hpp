#pragma once

#include "astdp/io.hpp"
#include "astdp/model.hpp"
#include "astdp/trainer.hpp"

#include <filesystem>

namespace astdp {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  TrainerState state;
};

/// Every array is stored as {"rows", "cols", "data"} with column-major data
/// printed at round-trip precision, so a load reproduces each double exactly.
Json checkpointToJson(const Model& model, const TrainerState& state);
Checkpoint checkpointFromJson(const Json& j);

void saveCheckpoint(const std::filesystem::path& path, const Model& model, const TrainerState& state);
Checkpoint loadCheckpoint(const std::filesystem::path& path);

}  // namespace astdp
