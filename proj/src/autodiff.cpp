#include "astdp/autodiff.hpp"

#include <cmath>

namespace astdp::ad {

namespace {

void requireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error("autodiff", std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var::Var(Matrix value) : node_(std::make_shared<Node>()) { node_->value = std::move(value); }

Var Var::scalar(double v) { return Var(Matrix::Constant(1, 1, v)); }

Matrix Var::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

Var Tape::parameter(Matrix value) {
  Var v(std::move(value));
  v.node_->requiresGrad = true;
  v.tape_ = this;
  nodes_.push_back(v.node_);
  return v;
}

Var Tape::record(Matrix value, std::function<void(const Matrix&)> backward) {
  Var v(std::move(value));
  v.node_->requiresGrad = true;
  v.node_->backward = std::move(backward);
  v.tape_ = this;
  nodes_.push_back(v.node_);
  return v;
}

Var Tape::apply(Matrix value, std::initializer_list<const Var*> inputs,
                std::function<void(const Matrix&)> backward) {
  for (const Var* in : inputs) {
    if (in->requiresGrad()) return in->tape()->record(std::move(value), std::move(backward));
  }
  return Var(std::move(value));
}

Var Tape::apply(Matrix value, const std::vector<Var>& inputs, std::function<void(const Matrix&)> backward) {
  for (const Var& in : inputs) {
    if (in.requiresGrad()) return in.tape()->record(std::move(value), std::move(backward));
  }
  return Var(std::move(value));
}

void Tape::backward(const Var& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw Error("autodiff", "backward needs a 1x1 loss");
  if (!loss.requiresGrad()) return;
  loss.node().addGrad(Matrix::Ones(1, 1));
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.backward && n.grad.size() != 0) n.backward(n.grad);
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double surrogateGrad(double x, const SurrogateSpec& spec) {
  if (spec.smoothForward || spec.kind == SurrogateKind::SigmoidDerivative) {
    const double s = sigmoid(spec.steepness * x);
    return spec.steepness * s * (1.0 - s);
  }
  return std::abs(x) < 0.5 * spec.width ? 1.0 / spec.width : 0.0;
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw Error("autodiff", "matmul: inner dimension mismatch");
  return Tape::apply(a.value() * b.value(), {&a, &b}, [a, b](const Matrix& g) {
    if (a.requiresGrad()) a.node().addGrad(g * b.value().transpose());
    if (b.requiresGrad()) b.node().addGrad(a.value().transpose() * g);
  });
}

Var transpose(const Var& a) {
  return Tape::apply(a.value().transpose(), {&a}, [a](const Matrix& g) { a.node().addGrad(g.transpose()); });
}

Var operator+(const Var& a, const Var& b) {
  requireSameShape(a, b, "add");
  return Tape::apply(a.value() + b.value(), {&a, &b}, [a, b](const Matrix& g) {
    a.node().addGrad(g);
    b.node().addGrad(g);
  });
}

Var operator-(const Var& a, const Var& b) {
  requireSameShape(a, b, "sub");
  return Tape::apply(a.value() - b.value(), {&a, &b}, [a, b](const Matrix& g) {
    a.node().addGrad(g);
    b.node().addGrad(-g);
  });
}

Var mul(const Var& a, const Var& b) {
  requireSameShape(a, b, "mul");
  return Tape::apply(a.value().cwiseProduct(b.value()), {&a, &b}, [a, b](const Matrix& g) {
    if (a.requiresGrad()) a.node().addGrad(g.cwiseProduct(b.value()));
    if (b.requiresGrad()) b.node().addGrad(g.cwiseProduct(a.value()));
  });
}

Var scale(const Var& a, double s) {
  return Tape::apply(a.value() * s, {&a}, [a, s](const Matrix& g) { a.node().addGrad(g * s); });
}

Var addScalar(const Var& a, double s) {
  return Tape::apply((a.value().array() + s).matrix(), {&a}, [a](const Matrix& g) { a.node().addGrad(g); });
}

Var oneMinus(const Var& a) {
  return Tape::apply((1.0 - a.value().array()).matrix(), {&a}, [a](const Matrix& g) { a.node().addGrad(-g); });
}

Var mulRow(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("autodiff", "mulRow: shape mismatch");
  Matrix v = a.value().array().rowwise() * row.value().row(0).array();
  return Tape::apply(std::move(v), {&a, &row}, [a, row](const Matrix& g) {
    if (a.requiresGrad()) a.node().addGrad((g.array().rowwise() * row.value().row(0).array()).matrix());
    if (row.requiresGrad()) row.node().addGrad(g.cwiseProduct(a.value()).colwise().sum());
  });
}

Var addRow(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("autodiff", "addRow: shape mismatch");
  Matrix v = a.value().rowwise() + row.value().row(0);
  return Tape::apply(std::move(v), {&a, &row}, [a, row](const Matrix& g) {
    a.node().addGrad(g);
    if (row.requiresGrad()) row.node().addGrad(g.colwise().sum());
  });
}

Var mulCol(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) throw Error("autodiff", "mulCol: shape mismatch");
  Matrix v = a.value().array().colwise() * col.value().col(0).array();
  return Tape::apply(std::move(v), {&a, &col}, [a, col](const Matrix& g) {
    if (a.requiresGrad()) a.node().addGrad((g.array().colwise() * col.value().col(0).array()).matrix());
    if (col.requiresGrad()) col.node().addGrad(g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var mulScalar(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1) throw Error("autodiff", "mulScalar: scalar must be 1x1");
  return Tape::apply(a.value() * s.item(), {&a, &s}, [a, s](const Matrix& g) {
    if (a.requiresGrad()) a.node().addGrad(g * s.item());
    if (s.requiresGrad()) s.node().addGrad(Matrix::Constant(1, 1, g.cwiseProduct(a.value()).sum()));
  });
}

Var sigmoid(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) { return sigmoid(x); });
  Matrix d = v.array() * (1.0 - v.array());
  return Tape::apply(std::move(v), {&a}, [a, d = std::move(d)](const Matrix& g) { a.node().addGrad(g.cwiseProduct(d)); });
}

Var tanh(const Var& a) {
  Matrix v = a.value().array().tanh().matrix();
  Matrix d = 1.0 - v.array().square();
  return Tape::apply(std::move(v), {&a}, [a, d = std::move(d)](const Matrix& g) { a.node().addGrad(g.cwiseProduct(d)); });
}

Var spike(const Var& u, const Var& threshold, const SurrogateSpec& spec) {
  const bool broadcast = threshold.rows() == 1 && threshold.cols() == 1;
  if (!broadcast) requireSameShape(u, threshold, "spike");
  Matrix diff = broadcast ? Matrix((u.value().array() - threshold.item()).matrix())
                          : Matrix(u.value() - threshold.value());
  Matrix v = spec.smoothForward
                 ? Matrix(diff.unaryExpr([&](double x) { return sigmoid(spec.steepness * x); }))
                 : Matrix(diff.unaryExpr([](double x) { return x >= 0.0 ? 1.0 : 0.0; }));
  if (!u.requiresGrad() && !threshold.requiresGrad()) return Var(std::move(v));
  Matrix d = diff.unaryExpr([&](double x) { return surrogateGrad(x, spec); });
  return Tape::apply(std::move(v), {&u, &threshold}, [u, threshold, broadcast, d = std::move(d)](const Matrix& g) {
    Matrix gu = g.cwiseProduct(d);
    if (u.requiresGrad()) u.node().addGrad(gu);
    if (threshold.requiresGrad()) {
      if (broadcast) {
        threshold.node().addGrad(Matrix::Constant(1, 1, -gu.sum()));
      } else {
        threshold.node().addGrad(-gu);
      }
    }
  });
}

Var concatCols(const std::vector<Var>& parts) {
  Index rows = parts.front().rows(), cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error("autodiff", "concatCols: row mismatch");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return Tape::apply(std::move(v), parts, [parts](const Matrix& g) {
    Index off = 0;
    for (const auto& p : parts) {
      if (p.requiresGrad()) p.node().addGrad(g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var sliceCols(const Var& a, Index start, Index count) {
  if (start < 0 || start + count > a.cols()) throw Error("autodiff", "sliceCols: out of range");
  return Tape::apply(a.value().middleCols(start, count), {&a}, [a, start, count](const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = g;
    a.node().addGrad(full);
  });
}

Var sum(const std::vector<Var>& parts) {
  Matrix v = parts.front().value();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    requireSameShape(parts.front(), parts[k], "sum");
    v += parts[k].value();
  }
  return Tape::apply(std::move(v), parts, [parts](const Matrix& g) {
    for (const auto& p : parts) p.node().addGrad(g);
  });
}

Var rowMean(const Var& a) {
  const double c = static_cast<double>(a.cols());
  return Tape::apply(a.value().rowwise().mean(), {&a}, [a, c](const Matrix& g) {
    a.node().addGrad((g.col(0) / c).replicate(1, a.cols()));
  });
}

Var element(const Var& a, Index r, Index c) {
  return Tape::apply(Matrix::Constant(1, 1, a.value()(r, c)), {&a}, [a, r, c](const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full(r, c) = g(0, 0);
    a.node().addGrad(full);
  });
}

Var softmaxRow(const Var& a) {
  if (a.rows() != 1) throw Error("autodiff", "softmaxRow expects a row vector");
  const double m = a.value().maxCoeff();
  Matrix e = (a.value().array() - m).exp().matrix();
  Matrix y = e / e.sum();
  return Tape::apply(y, {&a}, [a, y](const Matrix& g) {
    const double dot = g.cwiseProduct(y).sum();
    a.node().addGrad(y.cwiseProduct((g.array() - dot).matrix()));
  });
}

Var stdAcross(const std::vector<Var>& parts) {
  const double k = static_cast<double>(parts.size());
  Matrix mean = parts.front().value();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    requireSameShape(parts.front(), parts[i], "stdAcross");
    mean += parts[i].value();
  }
  mean /= k;
  Matrix var = Matrix::Zero(mean.rows(), mean.cols());
  for (const auto& p : parts) var += (p.value() - mean).array().square().matrix();
  Matrix sd = (var / k).array().sqrt().matrix();
  return Tape::apply(sd, parts, [parts, mean, sd, k](const Matrix& g) {
    const Matrix coef = (g.array() / (k * sd.array())).unaryExpr([](double x) { return std::isfinite(x) ? x : 0.0; });
    for (const auto& p : parts) {
      if (p.requiresGrad()) p.node().addGrad(coef.cwiseProduct(p.value() - mean));
    }
  });
}

Var bce(const Var& prob, const std::vector<int>& labels, const std::vector<Index>& rows, double eps) {
  if (prob.cols() != 1) throw Error("fusion-loss", "bce expects a column of probabilities");
  if (rows.empty()) throw Error("fusion-loss", "bce over an empty node set");
  double total = 0.0;
  for (Index r : rows) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y != 0 && y != 1) throw Error("fusion-loss", "labels must be 0 or 1");
    const double p = std::clamp(prob.value()(r, 0), eps, 1.0 - eps);
    total -= y ? std::log(p) : std::log(1.0 - p);
  }
  const double n = static_cast<double>(rows.size());
  return Tape::apply(Matrix::Constant(1, 1, total / n), {&prob}, [prob, labels, rows, eps, n](const Matrix& g) {
    Matrix gp = Matrix::Zero(prob.rows(), 1);
    for (Index r : rows) {
      const double p = prob.value()(r, 0);
      if (p < eps || p > 1.0 - eps) continue;
      const int y = labels[static_cast<std::size_t>(r)];
      gp(r, 0) += g(0, 0) * (y ? -1.0 / p : 1.0 / (1.0 - p)) / n;
    }
    prob.node().addGrad(gp);
  });
}

}  // namespace astdp::ad
