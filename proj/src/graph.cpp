#include "astdp/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace astdp {

namespace {

constexpr const char* kComponent = "graph-data";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parseNumber(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> splitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string formatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream openForRead(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(kComponent, "cannot open " + path.string());
  return in;
}

std::ofstream openForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kComponent, "cannot write " + path.string());
  return out;
}

}  // namespace

SparseGraph::SparseGraph(Index numNodes, std::vector<Index> rowOffsets, std::vector<Index> colIndices,
                         bool includesSelfLoops)
    : numNodes_(numNodes),
      rowOffsets_(std::move(rowOffsets)),
      colIndices_(std::move(colIndices)),
      selfLoops_(includesSelfLoops) {
  if (numNodes_ <= 0) throw Error(kComponent, "graph needs at least one node");
  if (static_cast<Index>(rowOffsets_.size()) != numNodes_ + 1 || rowOffsets_.front() != 0 ||
      rowOffsets_.back() != static_cast<Index>(colIndices_.size())) {
    throw Error(kComponent, "malformed CSR offsets");
  }
  for (Index i = 0; i < numNodes_; ++i) {
    if (rowOffsets_[i + 1] < rowOffsets_[i]) throw Error(kComponent, "row offsets must be nondecreasing");
    for (Index k = rowOffsets_[i]; k < rowOffsets_[i + 1]; ++k) {
      if (colIndices_[k] < 0 || colIndices_[k] >= numNodes_) throw Error(kComponent, "column index out of range");
      if (k > rowOffsets_[i] && colIndices_[k] <= colIndices_[k - 1]) {
        throw Error(kComponent, "row entries must be sorted and unique");
      }
    }
  }
}

SparseGraph SparseGraph::fromEdges(Index numNodes, std::span<const std::pair<Index, Index>> edges,
                                   bool undirected) {
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(numNodes));
  auto add = [&](Index src, Index dst) {
    if (src < 0 || dst < 0 || src >= numNodes || dst >= numNodes) {
      throw Error(kComponent, "edge endpoint out of range");
    }
    rows[dst].push_back(src);
  };
  for (auto [src, dst] : edges) {
    add(src, dst);
    if (undirected && src != dst) add(dst, src);
  }
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  bool allSelf = numNodes > 0;
  for (Index i = 0; i < numNodes; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    allSelf = allSelf && std::binary_search(r.begin(), r.end(), i);
    cols.insert(cols.end(), r.begin(), r.end());
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  return SparseGraph(numNodes, std::move(offsets), std::move(cols), allSelf);
}

bool SparseGraph::hasEdge(Index i, Index j) const {
  const auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

SparseGraph SparseGraph::withSelfLoops() const {
  if (selfLoops_) return *this;
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  cols.reserve(colIndices_.size() + static_cast<std::size_t>(numNodes_));
  for (Index i = 0; i < numNodes_; ++i) {
    const auto row = neighbors(i);
    auto pos = std::lower_bound(row.begin(), row.end(), i);
    cols.insert(cols.end(), row.begin(), pos);
    cols.push_back(i);
    if (pos != row.end() && *pos == i) ++pos;
    cols.insert(cols.end(), pos, row.end());
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  return SparseGraph(numNodes_, std::move(offsets), std::move(cols), true);
}

SparseGraph SparseGraph::induced(std::span<const Index> nodes) const {
  std::vector<Index> local(static_cast<std::size_t>(numNodes_), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<Index>(k);
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  bool allSelf = !nodes.empty();
  for (Index v : nodes) {
    std::vector<Index> row;
    for (Index u : neighbors(v)) {
      if (local[u] >= 0) row.push_back(local[u]);
    }
    std::sort(row.begin(), row.end());
    allSelf = allSelf && std::binary_search(row.begin(), row.end(), local[v]);
    cols.insert(cols.end(), row.begin(), row.end());
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  return SparseGraph(static_cast<Index>(nodes.size()), std::move(offsets), std::move(cols), allSelf);
}

std::vector<Index> LabeledDataset::nodesIn(Split s) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(static_cast<Index>(i));
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (numNodes < 2) throw Error(kComponent, "synthetic spec: numNodes must be >= 2");
  if (numAnomalies < 1 || numAnomalies >= numNodes) {
    throw Error(kComponent, "synthetic spec: need 1 <= numAnomalies < numNodes");
  }
  if (featureDim < 1) throw Error(kComponent, "synthetic spec: featureDim must be positive");
  if (!(baseEdgeProb > 0.0 && baseEdgeProb < 1.0)) {
    throw Error(kComponent, "synthetic spec: baseEdgeProb must lie in (0, 1)");
  }
  if (cliqueSize < 2 || cliqueSize > numAnomalies) {
    throw Error(kComponent, "synthetic spec: need 2 <= cliqueSize <= numAnomalies");
  }
  if (noiseSigma < 0.0) throw Error(kComponent, "synthetic spec: noiseSigma must be non-negative");
  if (!(noisyFeatureFraction > 0.0 && noisyFeatureFraction <= 1.0)) {
    throw Error(kComponent, "synthetic spec: noisyFeatureFraction must lie in (0, 1]");
  }
}

SparseGraph loadEdgeList(const std::filesystem::path& path, Index numNodes, bool undirected) {
  auto in = openForRead(path);
  std::vector<std::pair<Index, Index>> edges;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = splitCommas(view);
    Index src = 0, dst = 0;
    if (fields.size() != 2 || !parseNumber(fields[0], src) || !parseNumber(fields[1], dst)) {
      throw Error(kComponent, path.string() + ":" + std::to_string(lineNo) + ": expected \"src,dst\"");
    }
    if (src < 0 || dst < 0 || src >= numNodes || dst >= numNodes) {
      throw Error(kComponent, path.string() + ":" + std::to_string(lineNo) + ": node index out of range");
    }
    edges.emplace_back(src, dst);
  }
  return SparseGraph::fromEdges(numNodes, edges, undirected);
}

void writeEdgeList(const std::filesystem::path& path, const SparseGraph& g, bool undirected) {
  auto out = openForWrite(path);
  for (Index dst = 0; dst < g.numNodes(); ++dst) {
    for (Index src : g.neighbors(dst)) {
      if (undirected && src > dst) continue;
      out << src << ',' << dst << '\n';
    }
  }
}

Matrix loadFeatures(const std::filesystem::path& path) {
  auto in = openForRead(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto view = trim(line);
    if (view.empty()) continue;
    std::vector<double> row;
    for (auto field : splitCommas(view)) {
      double v = 0.0;
      if (!parseNumber(field, v) || !std::isfinite(v)) {
        throw Error(kComponent, path.string() + ":" + std::to_string(lineNo) + ": bad feature value");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(kComponent, path.string() + ":" + std::to_string(lineNo) + ": ragged feature row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(kComponent, path.string() + ": no feature rows");
  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) x(i, j) = rows[i][j];
  }
  return x;
}

void writeFeatures(const std::filesystem::path& path, const Matrix& x) {
  auto out = openForWrite(path);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << formatDouble(x(i, j));
    }
    out << '\n';
  }
}

std::vector<int> loadLabels(const std::filesystem::path& path, Index numNodes) {
  auto in = openForRead(path);
  std::vector<int> labels(static_cast<std::size_t>(numNodes), -1);
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = splitCommas(view);
    Index node = 0;
    int label = 0;
    if (fields.size() != 2 || !parseNumber(fields[0], node) || !parseNumber(fields[1], label)) {
      throw Error(kComponent, path.string() + ":" + std::to_string(lineNo) + ": expected \"nodeId,label\"");
    }
    if (node < 0 || node >= numNodes || (label != 0 && label != 1)) {
      throw Error(kComponent, path.string() + ":" + std::to_string(lineNo) + ": invalid node or label");
    }
    labels[node] = label;
  }
  if (std::find(labels.begin(), labels.end(), -1) != labels.end()) {
    throw Error(kComponent, path.string() + ": missing labels for some nodes");
  }
  return labels;
}

void writeLabels(const std::filesystem::path& path, const std::vector<int>& labels) {
  auto out = openForWrite(path);
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

FeatureMatrix zScoreNormalize(const FeatureMatrix& x) {
  if (x.standardized) throw Error(kComponent, "features are already standardized");
  constexpr double eps = 1e-9;
  const auto& v = x.values;
  const double n = static_cast<double>(v.rows());
  const RowVector mean = v.colwise().sum() / n;
  const Matrix centered = v.rowwise() - mean;
  const RowVector sd = (centered.array().square().colwise().sum() / n).sqrt().matrix();
  Matrix out = centered.array().rowwise() / (sd.array() + eps);
  return {std::move(out), true};
}

std::vector<Split> stratifiedSplit(const std::vector<int>& labels, const SplitRatios& ratios,
                                   std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0) {
    throw Error(kComponent, "split ratios must be positive and sum to 1");
  }
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};

  // Largest-remainder apportionment of `total` items over the three ratios.
  auto apportion = [&](Index total) {
    std::array<Index, 3> counts{};
    std::array<double, 3> rem{};
    Index assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = r[s] * static_cast<double>(total);
      counts[s] = static_cast<Index>(std::floor(exact + 1e-9));
      rem[s] = exact - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    while (assigned < total) {
      const auto best = std::max_element(rem.begin(), rem.end()) - rem.begin();
      ++counts[best];
      rem[best] = -1.0;
      ++assigned;
    }
    return counts;
  };

  std::vector<Index> anomalies, normals;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(kComponent, "labels must be 0 or 1");
    (labels[i] ? anomalies : normals).push_back(static_cast<Index>(i));
  }
  const auto sizes = apportion(static_cast<Index>(labels.size()));
  const auto anomalyCounts = apportion(static_cast<Index>(anomalies.size()));
  std::array<Index, 3> normalCounts{};
  for (int s = 0; s < 3; ++s) {
    normalCounts[s] = sizes[s] - anomalyCounts[s];
    if (anomalyCounts[s] < 1 || normalCounts[s] < 1) {
      throw Error(kComponent, "stratification infeasible: every split needs both classes");
    }
  }
  const double global = static_cast<double>(anomalies.size()) / static_cast<double>(labels.size());
  for (int s = 0; s < 3; ++s) {
    const double ratio = static_cast<double>(anomalyCounts[s]) / static_cast<double>(sizes[s]);
    if (std::abs(ratio - global) > 0.02 + 1e-12) {
      throw Error(kComponent, "stratification infeasible: split anomaly ratio deviates more than 2pp");
    }
  }

  std::mt19937_64 rng(seed);
  std::shuffle(anomalies.begin(), anomalies.end(), rng);
  std::shuffle(normals.begin(), normals.end(), rng);
  std::vector<Split> out(labels.size(), Split::Train);
  auto assign = [&](const std::vector<Index>& pool, const std::array<Index, 3>& counts) {
    std::size_t k = 0;
    for (int s = 0; s < 3; ++s) {
      for (Index c = 0; c < counts[s]; ++c) out[pool[k++]] = static_cast<Split>(s);
    }
  };
  assign(anomalies, anomalyCounts);
  assign(normals, normalCounts);
  return out;
}

LabeledDataset generateSynthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index n = spec.numNodes;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> anomalyNodes(order.begin(), order.begin() + spec.numAnomalies);

  // Erdos-Renyi background by geometric skipping over candidate pairs.
  std::vector<std::pair<Index, Index>> edges;
  const double logq = std::log1p(-spec.baseEdgeProb);
  for (Index i = 0; i < n; ++i) {
    Index j = spec.directed ? -1 : i;
    while (true) {
      const double u = unit(rng);
      j += 1 + static_cast<Index>(std::floor(std::log1p(-u) / logq));
      if (j >= n) break;
      if (j == i) continue;
      edges.emplace_back(i, j);
    }
  }

  // Anomaly nodes are partitioned into cliques; a trailing singleton joins the previous clique.
  std::vector<std::vector<Index>> cliques;
  for (Index k = 0; k < spec.numAnomalies; k += spec.cliqueSize) {
    const Index end = std::min(k + spec.cliqueSize, spec.numAnomalies);
    std::vector<Index> members(anomalyNodes.begin() + k, anomalyNodes.begin() + end);
    if (members.size() == 1 && !cliques.empty()) {
      cliques.back().push_back(members.front());
    } else {
      cliques.push_back(std::move(members));
    }
  }
  for (const auto& c : cliques) {
    for (std::size_t a = 0; a < c.size(); ++a) {
      for (std::size_t b = 0; b < c.size(); ++b) {
        if (a == b || (!spec.directed && b < a)) continue;
        edges.emplace_back(c[a], c[b]);
      }
    }
  }
  SparseGraph graph = SparseGraph::fromEdges(n, edges, !spec.directed);

  // Normal feature model: per-column offset and scale.
  const Index f = spec.featureDim;
  Matrix x(n, f);
  for (Index c = 0; c < f; ++c) {
    const double mu = -1.0 + 2.0 * unit(rng);
    const double scale = 0.5 + 1.5 * unit(rng);
    for (Index i = 0; i < n; ++i) x(i, c) = mu + scale * gauss(rng);
  }
  const RowVector mean = x.colwise().mean();
  const RowVector colStd =
      ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).sqrt().matrix();

  const Index noisyCols =
      std::max<Index>(1, static_cast<Index>(std::lround(spec.noisyFeatureFraction * static_cast<double>(f))));
  std::vector<Index> cols(static_cast<std::size_t>(f));
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (Index v : anomalyNodes) {
    labels[v] = 1;
    std::iota(cols.begin(), cols.end(), Index{0});
    std::shuffle(cols.begin(), cols.end(), rng);
    for (Index k = 0; k < noisyCols; ++k) {
      x(v, cols[k]) += spec.noiseSigma * colStd(cols[k]) * gauss(rng);
    }
  }

  LabeledDataset ds;
  ds.graph = std::move(graph);
  ds.features = {std::move(x), false};
  ds.labels = std::move(labels);
  ds.split = stratifiedSplit(ds.labels, spec.ratios, spec.seed);
  return ds;
}

}  // namespace astdp
