#include "astdp/stdp.hpp"

#include <cmath>

namespace astdp {

void StdpParams::validate() const {
  if (!(aPlus > 0 && aMinus > 0 && tauPlus > 0 && tauMinus > 0 && beta > 0)) {
    throw Error("stdp-layer", "rates and time constants must be positive");
  }
  if (!(clipLo < clipHi)) throw Error("stdp-layer", "clipLo must be below clipHi");
}

Matrix initStdp(Index hidden, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  Matrix w(hidden, hidden);
  for (Index j = 0; j < hidden; ++j) {
    for (Index i = 0; i < hidden; ++i) w(i, j) = uniform(rng);
  }
  return w;
}

Matrix stdpForward(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.rows()) throw Error("stdp-layer", "forward: dimension mismatch");
  return x * w;
}

Matrix stdpDelta(const Vector& meanTimes, const StdpParams& params) {
  params.validate();
  const Index h = meanTimes.size();
  Matrix delta(h, h);
  for (Index j = 0; j < h; ++j) {
    for (Index i = 0; i < h; ++i) {
      const double gap = params.anticausal ? meanTimes(j) - meanTimes(i) : meanTimes(i) - meanTimes(j);
      if (gap > 0) {
        delta(i, j) = params.aPlus * std::exp(-gap / params.tauPlus);
      } else if (gap < 0) {
        delta(i, j) = -params.aMinus * std::exp(gap / params.tauMinus);
      } else {
        delta(i, j) = 0.0;
      }
    }
  }
  return delta;
}

double applyUpdate(Matrix& w, const Matrix& delta, const StdpParams& params) {
  if (w.rows() != delta.rows() || w.cols() != delta.cols()) throw Error("stdp-layer", "update shape mismatch");
  const Matrix next = (w + params.beta * delta).cwiseMax(params.clipLo).cwiseMin(params.clipHi);
  const double change = (next - w).cwiseAbs().maxCoeff();
  w = next;
  return change;
}

Vector stdpStrength(const Matrix& w) { return w.cwiseAbs().colwise().sum().transpose(); }

}  // namespace astdp
