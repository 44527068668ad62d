#pragma once

// Minimal reverse-mode differentiation over dense Eigen matrices.
//
// Every pipeline stage is written once against `ad::Var`. Evaluated with
// constant inputs it is a plain forward pass (no tape, no closures); fed
// tape parameters it records a graph that `Tape::backward` differentiates.

#include "astdp/spike.hpp"

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

namespace astdp::ad {

class Tape;

struct Node {
  Matrix value;
  Matrix grad;
  bool requiresGrad = false;
  std::function<void(const Matrix&)> backward;

  template <typename Expr>
  void addGrad(const Expr& g) {
    if (!requiresGrad) return;
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    grad += g;
  }
};

class Var {
 public:
  Var() = default;
  /// Constant (never receives gradient).
  explicit Var(Matrix value);
  static Var scalar(double v);

  const Matrix& value() const { return node_->value; }
  /// Accumulated gradient; zeros if nothing flowed back.
  Matrix grad() const;
  bool requiresGrad() const { return node_ && node_->requiresGrad; }
  bool defined() const { return static_cast<bool>(node_); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double item() const { return node_->value(0, 0); }

  Node& node() const { return *node_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  std::shared_ptr<Node> node_;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var parameter(Matrix value);
  /// Backpropagates from a 1x1 loss through every recorded node.
  void backward(const Var& loss);
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records an op result. Used by op implementations; `inputs` decide
  /// whether the result needs gradient.
  static Var apply(Matrix value, std::initializer_list<const Var*> inputs,
                   std::function<void(const Matrix&)> backward);
  static Var apply(Matrix value, const std::vector<Var>& inputs,
                   std::function<void(const Matrix&)> backward);

 private:
  Var record(Matrix value, std::function<void(const Matrix&)> backward);
  std::vector<std::shared_ptr<Node>> nodes_;
};

enum class SurrogateKind { Rectangular, SigmoidDerivative };

/// How gradients cross the spike nonlinearity. The forward pass is the hard
/// threshold unless `smoothForward` is set, in which case the forward also
/// uses sigmoid(steepness * (u - theta)) and the backward is its exact
/// derivative (used for finite-difference checks of the whole graph).
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::Rectangular;
  double width = 1.0;
  double steepness = 4.0;
  bool smoothForward = false;
};

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var addScalar(const Var& a, double s);
Var oneMinus(const Var& a);
Var mulRow(const Var& a, const Var& row);
Var addRow(const Var& a, const Var& row);
Var mulCol(const Var& a, const Var& col);
Var mulScalar(const Var& a, const Var& s);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var spike(const Var& u, const Var& threshold, const SurrogateSpec& spec);
Var concatCols(const std::vector<Var>& parts);
Var sliceCols(const Var& a, Index start, Index count);
Var sum(const std::vector<Var>& parts);
Var rowMean(const Var& a);
Var element(const Var& a, Index r, Index c);
Var softmaxRow(const Var& a);
/// Elementwise population standard deviation across equally shaped inputs.
Var stdAcross(const std::vector<Var>& parts);
/// Mean binary cross-entropy over `rows` of a column of probabilities,
/// clamped to [eps, 1 - eps].
Var bce(const Var& prob, const std::vector<int>& labels, const std::vector<Index>& rows,
        double eps = 1e-7);

double sigmoid(double x);
double surrogateGrad(double x, const SurrogateSpec& spec);

}  // namespace astdp::ad
