#include "gbq/autodiff.hpp"

#include "gbq/error.hpp"

#include <cmath>

namespace gbq {

RealVar Tape::leaf(Eigen::MatrixXd value) {
  reals_.push_back({std::move(value), {}, false});
  return {reals_.size() - 1};
}

CplxVar Tape::leaf(std::vector<Operator2> value) {
  cplx_.push_back({std::move(value), {}, false});
  return {cplx_.size() - 1};
}

Eigen::MatrixXd& Tape::grad(RealVar v) {
  auto& n = reals_.at(v.id);
  if (!n.touched) {
    n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    n.touched = true;
  }
  return n.grad;
}

std::vector<Operator2>& Tape::grad(CplxVar v) {
  auto& n = cplx_.at(v.id);
  if (!n.touched) {
    n.grad.assign(n.value.size(), Operator2::Zero());
    n.touched = true;
  }
  return n.grad;
}

void Tape::backward(RealVar out) {
  grad(out).setOnes();
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::clear() {
  reals_.clear();
  cplx_.clear();
  ops_.clear();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

RealVar add(Tape& t, RealVar a, RealVar b) {
  if (t.value(a).rows() != t.value(b).rows() || t.value(a).cols() != t.value(b).cols()) {
    throw Error(ErrorKind::ShapeMismatch, "add: operand shapes differ");
  }
  RealVar y = t.leaf(t.value(a) + t.value(b));
  t.on_backward([&t, a, b, y] {
    if (!t.has_grad(y)) return;
    t.grad(a) += t.grad(y);
    t.grad(b) += t.grad(y);
  });
  return y;
}

RealVar affine(Tape& t, RealVar x, double scale, double shift) {
  RealVar y = t.leaf((scale * t.value(x).array() + shift).matrix());
  t.on_backward([&t, x, y, scale] {
    if (t.has_grad(y)) t.grad(x) += scale * t.grad(y);
  });
  return y;
}

RealVar square(Tape& t, RealVar x) {
  RealVar y = t.leaf(t.value(x).array().square().matrix());
  t.on_backward([&t, x, y] {
    if (t.has_grad(y)) t.grad(x).array() += 2.0 * t.value(x).array() * t.grad(y).array();
  });
  return y;
}

RealVar sigmoid(Tape& t, RealVar x) {
  RealVar y = t.leaf(t.value(x).unaryExpr([](double v) { return sigmoid(v); }));
  t.on_backward([&t, x, y] {
    if (!t.has_grad(y)) return;
    const auto& s = t.value(y).array();
    t.grad(x).array() += t.grad(y).array() * s * (1.0 - s);
  });
  return y;
}

RealVar tanh(Tape& t, RealVar x) {
  RealVar y = t.leaf(t.value(x).array().tanh().matrix());
  t.on_backward([&t, x, y] {
    if (!t.has_grad(y)) return;
    const auto& s = t.value(y).array();
    t.grad(x).array() += t.grad(y).array() * (1.0 - s * s);
  });
  return y;
}

RealVar sum(Tape& t, RealVar x) {
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = t.value(x).sum();
  RealVar y = t.leaf(std::move(v));
  t.on_backward([&t, x, y] {
    if (t.has_grad(y)) t.grad(x).array() += t.grad(y)(0, 0);
  });
  return y;
}

RealVar col_sum(Tape& t, RealVar x) {
  RealVar y = t.leaf(t.value(x).colwise().sum());
  t.on_backward([&t, x, y] {
    if (!t.has_grad(y)) return;
    t.grad(x).rowwise() += t.grad(y).row(0);
  });
  return y;
}

RealVar rows(Tape& t, RealVar x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || start + count > t.value(x).rows()) {
    throw Error(ErrorKind::ShapeMismatch, "rows: slice out of range");
  }
  RealVar y = t.leaf(t.value(x).middleRows(start, count));
  t.on_backward([&t, x, y, start, count] {
    if (t.has_grad(y)) t.grad(x).middleRows(start, count) += t.grad(y);
  });
  return y;
}

RealVar mse(Tape& t, RealVar pred, const Eigen::MatrixXd& target) {
  const auto& p = t.value(pred);
  if (p.rows() != target.rows() || p.cols() != target.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "mse: prediction and target shapes differ");
  }
  const double n = static_cast<double>(p.size());
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = (p - target).squaredNorm() / n;
  RealVar y = t.leaf(std::move(v));
  t.on_backward([&t, pred, y, target, n] {
    if (!t.has_grad(y)) return;
    t.grad(pred) += (2.0 * t.grad(y)(0, 0) / n) * (t.value(pred) - target);
  });
  return y;
}

}  // namespace gbq
