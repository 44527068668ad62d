#include "astdp/spike.hpp"

#include <algorithm>

namespace astdp {

SpikeTensor::SpikeTensor(Index nodes, Index steps, Index features)
    : nodes_(nodes), steps_(steps), features_(features) {
  if (nodes <= 0 || steps <= 0 || features <= 0) {
    throw Error("spike-core", "SpikeTensor dimensions must be positive");
  }
  bits_.assign(static_cast<std::size_t>(nodes * steps * features), 0);
}

void SpikeTensor::setStep(Index t, const Matrix& spikes) {
  if (spikes.rows() != nodes_ || spikes.cols() != features_) {
    throw Error("spike-core", "step matrix shape mismatch");
  }
  for (Index i = 0; i < nodes_; ++i) {
    for (Index j = 0; j < features_; ++j) {
      set(i, t, j, spikes(i, j) >= 0.5);
    }
  }
}

Matrix SpikeTensor::step(Index t) const {
  Matrix out(nodes_, features_);
  for (Index i = 0; i < nodes_; ++i) {
    for (Index j = 0; j < features_; ++j) {
      out(i, j) = (*this)(i, t, j) ? 1.0 : 0.0;
    }
  }
  return out;
}

std::size_t SpikeTensor::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SpikeTrain::SpikeTrain(std::vector<int> times, int steps) : times_(std::move(times)) {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (times_[k] < 1 || times_[k] > steps) {
      throw Error("spike-core", "spike time outside [1, T]");
    }
    if (k > 0 && times_[k] <= times_[k - 1]) {
      throw Error("spike-core", "spike times must be strictly increasing");
    }
  }
}

SpikeSummary summarize(const SpikeTensor& s) {
  const Index n = s.nodes(), steps = s.steps(), h = s.features();
  SpikeSummary out{Matrix::Constant(n, h, static_cast<double>(steps)), IntMatrix::Zero(n, h)};
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < steps; ++t) {
      for (Index j = 0; j < h; ++j) {
        if (!s(i, t, j)) continue;
        if (out.counts(i, j) == 0) out.firstSpike(i, j) = static_cast<double>(t + 1);
        ++out.counts(i, j);
      }
    }
  }
  return out;
}

SpikeTrain spikeTrain(const SpikeTensor& s, Index node, Index feature) {
  std::vector<int> times;
  for (Index t = 0; t < s.steps(); ++t) {
    if (s(node, t, feature)) times.push_back(static_cast<int>(t + 1));
  }
  return SpikeTrain(std::move(times), static_cast<int>(s.steps()));
}

std::size_t hammingDistance(const SpikeTensor& a, const SpikeTensor& b) {
  if (!a.sameShape(b)) throw Error("spike-core", "hammingDistance: dimension mismatch");
  const auto x = a.bits();
  const auto y = b.bits();
  std::size_t d = 0;
  for (std::size_t k = 0; k < x.size(); ++k) d += (x[k] != y[k]);
  return d;
}

Matrix spikeRates(const SpikeTensor& s) {
  return summarize(s).counts.cast<double>() / static_cast<double>(s.steps());
}

std::vector<int> interSpikeIntervals(const SpikeTrain& train) {
  const auto& t = train.times();
  std::vector<int> isi;
  for (std::size_t k = 1; k < t.size(); ++k) isi.push_back(t[k] - t[k - 1]);
  return isi;
}

double spikeDensity(const SpikeTensor& s) {
  if (s.size() == 0) return 0.0;
  return static_cast<double>(s.count()) / static_cast<double>(s.size());
}

}  // namespace astdp
