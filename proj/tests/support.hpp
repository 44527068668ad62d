#pragma once

#include "astdp/graph.hpp"

#include <random>

namespace testing {

using astdp::Index;

inline astdp::SpikeTensor randomSpikes(std::mt19937_64& rng, Index nodes, Index steps, Index features, double p) {
  astdp::SpikeTensor s(nodes, steps, features);
  std::bernoulli_distribution fire(p);
  for (Index i = 0; i < nodes; ++i) {
    for (Index t = 0; t < steps; ++t) {
      for (Index j = 0; j < features; ++j) s.set(i, t, j, fire(rng));
    }
  }
  return s;
}

inline astdp::Matrix gaussian(std::mt19937_64& rng, Index rows, Index cols, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  astdp::Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

/// Small labelled graph with every node in the training split.
inline astdp::LabeledDataset tinyDataset(std::uint64_t seed, Index nodes = 12, Index features = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < nodes; ++i) {
    for (Index j = i + 1; j < nodes; ++j) {
      if (unit(rng) < 0.3) edges.emplace_back(i, j);
    }
  }
  astdp::LabeledDataset d;
  d.graph = astdp::SparseGraph::fromEdges(nodes, edges, true);
  d.features.values = gaussian(rng, nodes, features);
  d.labels.assign(static_cast<std::size_t>(nodes), 0);
  for (Index i = 1; i < nodes; i += 4) d.labels[static_cast<std::size_t>(i)] = 1;
  d.split.assign(static_cast<std::size_t>(nodes), astdp::Split::Train);
  return d;
}

}  // namespace testing
