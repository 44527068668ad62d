#include "astdp/edhmm.hpp"

#include <cmath>
#include <limits>

namespace astdp {

namespace {

constexpr double kEps = 1e-8;

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

Matrix distances(const Matrix& z, const Matrix& p) {
  Matrix d(z.rows(), p.rows());
  for (Index k = 0; k < p.rows(); ++k) {
    for (Index i = 0; i < z.rows(); ++i) d(i, k) = (z.row(i) - p.row(k)).norm();
  }
  return d;
}

}  // namespace

void MemoryParams::validate() const {
  if (prototypes < 1) throw Error("edhmm", "at least one prototype is required");
  if (!(temporalMix > 0 && temporalMix < 1)) throw Error("edhmm", "temporalMix must lie in (0,1)");
  if (!(temperature > 0)) throw Error("edhmm", "temperature must be positive");
  if (!(learningRate > 0 && learningRate <= 1)) throw Error("edhmm", "learningRate must lie in (0,1]");
  if (!(homeoDecay > 0 && homeoDecay <= 1)) throw Error("edhmm", "homeoDecay must lie in (0,1]");
  if (!(strengthScale > 0) || strengthGain < 0 || strengthDecay < 0) {
    throw Error("edhmm", "invalid strength parameters");
  }
}

PrototypeMemory::PrototypeMemory(const MemoryParams& p, Index steps, Index hidden)
    : params(p),
      prototypes(Matrix::Zero(p.prototypes, hidden)),
      strength(Vector::Ones(p.prototypes)),
      homeostasis(Vector::Ones(p.prototypes)),
      kernels(steps, hidden),
      absorbed(Vector::Zero(p.prototypes)) {
  params.validate();
  for (Index t = 0; t < steps; ++t) kernels.row(t).setConstant(static_cast<double>(t + 1) / static_cast<double>(steps));
}

Matrix combinedRepresentation(const SpikeTensor& s, const PrototypeMemory& memory) {
  if (s.steps() != memory.kernels.rows() || s.features() != memory.kernels.cols()) {
    throw Error("edhmm", "spike tensor does not match the temporal kernels");
  }
  const double mix = memory.params.temporalMix;
  Matrix z = Matrix::Zero(s.nodes(), s.features());
  for (Index i = 0; i < s.nodes(); ++i) {
    for (Index t = 0; t < s.steps(); ++t) {
      for (Index j = 0; j < s.features(); ++j) {
        if (s(i, t, j)) z(i, j) += 1.0 + mix * memory.kernels(t, j);
      }
    }
  }
  return z;
}

void seedPrototypes(PrototypeMemory& memory, const Matrix& z) {
  const Index p = memory.size();
  if (z.rows() < 1 || z.cols() != memory.prototypes.cols()) throw Error("edhmm", "cannot seed from this batch");
  std::vector<Index> chosen;
  if (memory.params.seeding == PrototypeSeeding::FirstDistinct) {
    for (Index i = 0; i < z.rows() && static_cast<Index>(chosen.size()) < p; ++i) {
      bool fresh = true;
      for (Index c : chosen) fresh = fresh && z.row(c) != z.row(i);
      if (fresh) chosen.push_back(i);
    }
  } else {
    chosen.push_back(0);
    Vector nearest = (z.rowwise() - z.row(0)).rowwise().squaredNorm();
    while (static_cast<Index>(chosen.size()) < std::min(p, z.rows())) {
      Index far = 0;
      nearest.maxCoeff(&far);
      if (nearest(far) == 0.0) break;
      chosen.push_back(far);
      nearest = nearest.cwiseMin((z.rowwise() - z.row(far)).rowwise().squaredNorm());
    }
  }
  for (Index k = 0; k < p; ++k) {
    memory.prototypes.row(k) = z.row(chosen[static_cast<std::size_t>(k) % chosen.size()]);
  }
  memory.absorbed.setOnes();
  memory.seeded = true;
}

Matrix matchScores(const Matrix& z, const PrototypeMemory& memory) {
  const Matrix d = distances(z, memory.prototypes);
  const Vector gain = memory.homeostasis.cwiseProduct(memory.strength);
  Matrix m(d.rows(), d.cols());
  for (Index k = 0; k < d.cols(); ++k) {
    for (Index i = 0; i < d.rows(); ++i) m(i, k) = std::exp(-d(i, k) / memory.params.temperature) * gain(k);
  }
  return m;
}

MemoryScores memoryAnomalyScore(const Matrix& z, const Matrix& match, const PrototypeMemory& memory) {
  const Index n = z.rows(), p = match.cols();
  const Matrix d = distances(z, memory.prototypes);
  MemoryScores out{Vector(n), std::vector<Index>(static_cast<std::size_t>(n))};
  for (Index i = 0; i < n; ++i) {
    // Winner chosen on log scores so far-away rows still resolve.
    Index best = 0;
    double bestLog = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < p; ++k) {
      const double logScore = -d(i, k) / memory.params.temperature + std::log(memory.homeostasis(k)) +
                              std::log(memory.strength(k));
      if (logScore > bestLog) {
        bestLog = logScore;
        best = k;
      }
    }
    const double top = match(i, best);
    double second = 0.0;
    for (Index k = 0; k < p; ++k) {
      if (k != best) second = std::max(second, match(i, k));
    }
    const double mismatch = 1.0 - logistic(top - memory.params.matchThreshold);
    const double residual = 1.0 + d(i, best);
    const double margin = 1.0 + (top - second) / (top + kEps);
    out.raw(i) = mismatch * residual * margin;
    out.assignment[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

void updateMemory(PrototypeMemory& memory, const Matrix& z, const std::vector<Index>& assignment) {
  const Index p = memory.size();
  const auto& prm = memory.params;
  Matrix residual = Matrix::Zero(p, z.cols());
  Vector count = Vector::Zero(p);
  for (Index i = 0; i < z.rows(); ++i) {
    const Index k = assignment[static_cast<std::size_t>(i)];
    if (k < 0 || k >= p) throw Error("edhmm", "assignment out of range");
    residual.row(k) += z.row(i) - memory.prototypes.row(k);
    count(k) += 1.0;
  }
  for (Index k = 0; k < p; ++k) {
    if (prm.countNormalizedGain) {
      memory.absorbed(k) += count(k);
      if (count(k) > 0) memory.prototypes.row(k) += residual.row(k) / memory.absorbed(k);
    } else {
      memory.prototypes.row(k) += prm.learningRate * residual.row(k) / (count(k) + kEps);
      memory.absorbed(k) += count(k);
    }
    memory.strength(k) = prm.strengthDecay * memory.strength(k) + prm.strengthGain * logistic(count(k) / prm.strengthScale);
    memory.homeostasis(k) = count(k) > 0 ? 1.0 : std::max(prm.homeoFloor, prm.homeoDecay * memory.homeostasis(k));
  }
}

double distortion(const Matrix& z, const PrototypeMemory& memory) {
  double total = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    total += (memory.prototypes.rowwise() - z.row(i)).rowwise().squaredNorm().minCoeff();
  }
  return z.rows() ? total / static_cast<double>(z.rows()) : 0.0;
}

}  // namespace astdp
