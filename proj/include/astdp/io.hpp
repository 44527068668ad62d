#pragma once

#include "astdp/metrics.hpp"
#include "astdp/model.hpp"
#include "astdp/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace astdp {

using Json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

/// Shortest decimal text that parses back to the same double.
std::string formatDouble(double v);

/// Finite values as numbers; infinities and NaN as the strings "inf", "-inf", "nan".
Json realToJson(double v);
double realFromJson(const Json& j);

/// {"rows", "cols", "data"} with data in column-major order.
Json matrixToJson(const Matrix& m);
Matrix matrixFromJson(const Json& j);

Json toJson(const ModelConfig& c);
Json toJson(const TrainConfig& c);
Json toJson(const SyntheticSpec& s);
Json toJson(const EvalReport& r);

/// Overlay: keys present in `j` replace fields of `c`; unknown keys throw.
void overlay(const Json& j, ModelConfig& c);
void overlay(const Json& j, TrainConfig& c);
void overlay(const Json& j, SyntheticSpec& s);
EvalReport reportFromJson(const Json& j);

Json readJson(const std::filesystem::path& path);
/// Pretty-printed with sorted keys and a trailing newline.
void writeJson(const std::filesystem::path& path, const Json& j);

/// Writes edges.csv, features.csv, labels.csv and dataset.json into `dir`.
/// Returns the manifest path.
std::filesystem::path saveDataset(const std::filesystem::path& dir, const LabeledDataset& data,
                                  const SyntheticSpec& spec);
/// Reads a dataset manifest; the split is rebuilt from the recorded seed and ratios.
LabeledDataset loadDataset(const std::filesystem::path& manifest);

/// "nodeId,pred,mem,iso,temp,uncert,fused,label" for each of `nodes`.
void writeScoresCsv(const std::filesystem::path& path, const AnomalyScoreVector& scores,
                    const std::vector<int>& labels, const std::vector<Index>& nodes);
void writeHistoryCsv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history);

/// Hex SHA-1 of "blob <size>\0" followed by the bytes.
std::string blobHash(const std::string& bytes);
std::string fileHash(const std::filesystem::path& path);

/// Manifest of one command: resolved config, inputs and outputs with hashes.
Json runManifest(const std::string& command, const Json& config, const std::vector<std::filesystem::path>& inputs,
                 const std::vector<std::filesystem::path>& outputs);

}  // namespace astdp
