#pragma once

// Reverse-mode differentiation tape over batched values.
//
// Real nodes are (rows x batch) matrices; complex nodes are one 2x2 operator
// per batch column. Trainable parameters live outside the tape: ops take the
// parameter block by const reference plus an optional gradient block that the
// backward closure accumulates into.
//
// Complex gradients follow dL = Re sum(conj(G) .* dZ), i.e. G = dL/dRe Z + i dL/dIm Z.

#include "gbq/linalg2.hpp"

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <vector>

namespace gbq {

struct RealVar {
  std::size_t id = static_cast<std::size_t>(-1);
};

struct CplxVar {
  std::size_t id = static_cast<std::size_t>(-1);
};

class Tape {
 public:
  RealVar leaf(Eigen::MatrixXd value);
  CplxVar leaf(std::vector<Operator2> value);

  const Eigen::MatrixXd& value(RealVar v) const { return reals_.at(v.id).value; }
  const std::vector<Operator2>& value(CplxVar v) const { return cplx_.at(v.id).value; }

  /// Gradient buffer, zero-initialized on first access.
  Eigen::MatrixXd& grad(RealVar v);
  std::vector<Operator2>& grad(CplxVar v);
  bool has_grad(RealVar v) const { return reals_.at(v.id).touched; }
  bool has_grad(CplxVar v) const { return cplx_.at(v.id).touched; }

  /// Registers a backward closure; closures run in exact reverse order.
  void on_backward(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

  /// Seeds d(sum of entries of out) = 1 and runs all closures in reverse.
  void backward(RealVar out);

  std::size_t num_ops() const { return ops_.size(); }
  std::size_t num_nodes() const { return reals_.size() + cplx_.size(); }
  void clear();

 private:
  struct RealNode {
    Eigen::MatrixXd value, grad;
    bool touched = false;
  };
  struct CplxNode {
    std::vector<Operator2> value, grad;
    bool touched = false;
  };
  std::deque<RealNode> reals_;
  std::deque<CplxNode> cplx_;
  std::vector<std::function<void()>> ops_;
};

// Elementwise and reduction primitives.
RealVar add(Tape& t, RealVar a, RealVar b);
RealVar affine(Tape& t, RealVar x, double scale, double shift);
RealVar square(Tape& t, RealVar x);
RealVar sigmoid(Tape& t, RealVar x);
RealVar tanh(Tape& t, RealVar x);
/// Sum of all entries as a 1x1 node.
RealVar sum(Tape& t, RealVar x);
/// Column sums as a 1 x batch node.
RealVar col_sum(Tape& t, RealVar x);
/// Rows [start, start + count) of x.
RealVar rows(Tape& t, RealVar x, Eigen::Index start, Eigen::Index count);
/// Mean of squared differences over every entry; 1x1.
RealVar mse(Tape& t, RealVar pred, const Eigen::MatrixXd& target);

double sigmoid(double x);

}  // namespace gbq
