#pragma once

#include "astdp/spike.hpp"

#include <random>

namespace astdp {

struct StdpParams {
  double aPlus = 0.01;
  double aMinus = 0.012;
  double tauPlus = 20.0;
  double tauMinus = 20.0;
  double beta = 1e-4;
  double clipLo = -1.0;
  double clipHi = 1.0;
  /// Potentiate when the pre-synaptic feature fires later than the
  /// post-synaptic one (the reverse of the causal default).
  bool anticausal = false;

  void validate() const;
};

/// Small uniform weights in [-0.1, 0.1].
Matrix initStdp(Index hidden, std::mt19937_64& rng);

Matrix stdpForward(const Matrix& x, const Matrix& w);

/// Pairwise timing kernel over mean spike times. Entry (i, j) couples
/// post-synaptic feature i with pre-synaptic feature j.
Matrix stdpDelta(const Vector& meanTimes, const StdpParams& params);

/// clip(W + beta * delta); returns the largest applied change.
double applyUpdate(Matrix& w, const Matrix& delta, const StdpParams& params);

/// Column-wise absolute sums.
Vector stdpStrength(const Matrix& w);

}  // namespace astdp
