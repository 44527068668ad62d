#pragma once

#include "astdp/spike.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace astdp {

/// CSR adjacency. Row i lists the nodes j whose messages node i receives,
/// sorted ascending without duplicates.
class SparseGraph {
 public:
  SparseGraph() = default;
  SparseGraph(Index numNodes, std::vector<Index> rowOffsets, std::vector<Index> colIndices,
              bool includesSelfLoops);

  /// Builds a graph from (src, dst) pairs; dst's row receives src. With
  /// `undirected` both directions are stored. Duplicates are dropped.
  static SparseGraph fromEdges(Index numNodes, std::span<const std::pair<Index, Index>> edges,
                               bool undirected);

  Index numNodes() const noexcept { return numNodes_; }
  Index numEdges() const noexcept { return static_cast<Index>(colIndices_.size()); }
  bool includesSelfLoops() const noexcept { return selfLoops_; }
  const std::vector<Index>& rowOffsets() const noexcept { return rowOffsets_; }
  const std::vector<Index>& colIndices() const noexcept { return colIndices_; }

  std::span<const Index> neighbors(Index i) const {
    return {colIndices_.data() + rowOffsets_[i],
            static_cast<std::size_t>(rowOffsets_[i + 1] - rowOffsets_[i])};
  }
  Index degree(Index i) const { return rowOffsets_[i + 1] - rowOffsets_[i]; }
  bool hasEdge(Index i, Index j) const;

  /// Copy with (i, i) present in every row.
  SparseGraph withSelfLoops() const;
  /// Subgraph induced by `nodes` (renumbered in the given order).
  SparseGraph induced(std::span<const Index> nodes) const;

  friend bool operator==(const SparseGraph&, const SparseGraph&) = default;

 private:
  Index numNodes_ = 0;
  std::vector<Index> rowOffsets_{0};
  std::vector<Index> colIndices_;
  bool selfLoops_ = false;
};

struct FeatureMatrix {
  Matrix values;
  bool standardized = false;
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct LabeledDataset {
  SparseGraph graph;
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<Split> split;

  std::vector<Index> nodesIn(Split s) const;
};

struct SyntheticSpec {
  Index numNodes = 500;
  Index numAnomalies = 25;
  Index featureDim = 32;
  double baseEdgeProb = 0.02;
  Index cliqueSize = 5;
  double noiseSigma = 3.0;
  double noisyFeatureFraction = 0.5;
  std::uint64_t seed = 0;
  bool directed = false;
  SplitRatios ratios{};

  void validate() const;
};

SparseGraph loadEdgeList(const std::filesystem::path& path, Index numNodes, bool undirected = true);
void writeEdgeList(const std::filesystem::path& path, const SparseGraph& g, bool undirected = true);

Matrix loadFeatures(const std::filesystem::path& path);
void writeFeatures(const std::filesystem::path& path, const Matrix& x);

std::vector<int> loadLabels(const std::filesystem::path& path, Index numNodes);
void writeLabels(const std::filesystem::path& path, const std::vector<int>& labels);

/// Column-wise (x - mean) / (population std + 1e-9).
FeatureMatrix zScoreNormalize(const FeatureMatrix& x);

std::vector<Split> stratifiedSplit(const std::vector<int>& labels, const SplitRatios& ratios,
                                   std::uint64_t seed);

LabeledDataset generateSynthetic(const SyntheticSpec& spec);

}  // namespace astdp
