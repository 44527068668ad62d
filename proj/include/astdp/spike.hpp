#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace astdp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Error raised by any pipeline component. `component()` names the module
/// that failed so callers up the stack can report where a run broke.
class Error : public std::runtime_error {
 public:
  Error(std::string component, const std::string& what)
      : std::runtime_error(component + ": " + what), component_(std::move(component)) {}
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

/// Binary spike record indexed [node][step][feature]. Steps are 0-based in
/// the accessor API; spike *times* reported elsewhere are 1-based.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(Index nodes, Index steps, Index features);

  Index nodes() const noexcept { return nodes_; }
  Index steps() const noexcept { return steps_; }
  Index features() const noexcept { return features_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(Index node, Index step, Index feature) const {
    return bits_[offset(node, step, feature)] != 0;
  }
  void set(Index node, Index step, Index feature, bool value) {
    bits_[offset(node, step, feature)] = value ? 1 : 0;
  }

  /// Writes one time step from a dense [N x H] matrix (entry >= 0.5 is a spike).
  void setStep(Index step, const Matrix& spikes);
  /// Dense [N x H] view of one step.
  Matrix step(Index step) const;

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const;

  bool sameShape(const SpikeTensor& other) const noexcept {
    return nodes_ == other.nodes_ && steps_ == other.steps_ && features_ == other.features_;
  }
  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  std::size_t offset(Index node, Index step, Index feature) const noexcept {
    return static_cast<std::size_t>((node * steps_ + step) * features_ + feature);
  }

  Index nodes_ = 0;
  Index steps_ = 0;
  Index features_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// First-spike times (1-based, T when silent) and spike counts per (node, feature).
struct SpikeSummary {
  Matrix firstSpike;
  IntMatrix counts;
};

/// Strictly increasing 1-based spike times of one neuron.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  explicit SpikeTrain(std::vector<int> times, int steps);

  const std::vector<int>& times() const noexcept { return times_; }
  bool empty() const noexcept { return times_.empty(); }

 private:
  std::vector<int> times_;
};

SpikeSummary summarize(const SpikeTensor& s);
SpikeTrain spikeTrain(const SpikeTensor& s, Index node, Index feature);

std::size_t hammingDistance(const SpikeTensor& a, const SpikeTensor& b);
Matrix spikeRates(const SpikeTensor& s);
std::vector<int> interSpikeIntervals(const SpikeTrain& train);
double spikeDensity(const SpikeTensor& s);

}  // namespace astdp
