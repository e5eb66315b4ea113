#include "gbq/autodiff.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace gbq;

namespace {

// Gradient of a scalar tape function with respect to every entry of x0,
// compared with central differences.
template <class F>
double worst_fd(const Eigen::MatrixXd& x0, F build) {
  Tape t;
  const RealVar x = t.leaf(x0);
  t.backward(build(t, x));
  const Eigen::MatrixXd g = t.grad(x);
  Eigen::MatrixXd xv = x0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < xv.size(); ++i) {
    auto f = [&] {
      Tape u;
      return u.value(build(u, u.leaf(xv)))(0, 0);
    };
    worst = std::max(worst, test::rel_err(g.data()[i], test::central_difference(f, xv.data()[i]), 1e-7));
  }
  return worst;
}

Eigen::MatrixXd sample() {
  Eigen::MatrixXd m(3, 2);
  m << 0.3, -1.2, 0.8, 0.05, -0.4, 2.0;
  return m;
}

}  // namespace

TEST_CASE("elementwise primitives match finite differences") {
  CHECK(worst_fd(sample(), [](Tape& t, RealVar x) { return sum(t, sigmoid(t, x)); }) < 1e-7);
  CHECK(worst_fd(sample(), [](Tape& t, RealVar x) { return sum(t, tanh(t, x)); }) < 1e-7);
  CHECK(worst_fd(sample(), [](Tape& t, RealVar x) { return sum(t, square(t, affine(t, x, 2.0, -0.5))); }) < 1e-7);
  CHECK(worst_fd(sample(), [](Tape& t, RealVar x) { return sum(t, add(t, x, square(t, x))); }) < 1e-7);
}

TEST_CASE("reductions and slicing match finite differences") {
  CHECK(worst_fd(sample(), [](Tape& t, RealVar x) { return sum(t, square(t, col_sum(t, x))); }) < 1e-7);
  CHECK(worst_fd(sample(), [](Tape& t, RealVar x) { return sum(t, square(t, rows(t, x, 1, 2))); }) < 1e-7);
  const Eigen::MatrixXd target = Eigen::MatrixXd::Constant(3, 2, 0.1);
  CHECK(worst_fd(sample(), [&](Tape& t, RealVar x) { return mse(t, tanh(t, x), target); }) < 1e-7);
}

TEST_CASE("mse of a constant offset is the squared offset") {
  Tape t;
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(18, 4);
  const RealVar p = t.leaf(y.array() + 0.1);
  CHECK(t.value(mse(t, p, y))(0, 0) == doctest::Approx(0.01));
}

TEST_CASE("backward runs closures in reverse recording order") {
  Tape t;
  std::vector<int> seen;
  const RealVar x = t.leaf(Eigen::MatrixXd::Ones(1, 1));
  t.on_backward([&] { seen.push_back(1); });
  t.on_backward([&] { seen.push_back(2); });
  t.on_backward([&] { seen.push_back(3); });
  t.backward(x);
  CHECK(seen == std::vector<int>{3, 2, 1});
}

TEST_CASE("untouched nodes report no gradient; clear resets the tape") {
  Tape t;
  const RealVar a = t.leaf(sample());
  const RealVar b = t.leaf(sample());
  t.backward(sum(t, a));
  CHECK(t.has_grad(a));
  CHECK_FALSE(t.has_grad(b));
  CHECK(t.grad(b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.num_ops() > 0);
  t.clear();
  CHECK(t.num_ops() == 0);
  CHECK(t.num_nodes() == 0);
}

TEST_CASE("a reused node accumulates gradients from every use") {
  Tape t;
  const RealVar x = t.leaf(Eigen::MatrixXd::Constant(1, 1, 3.0));
  t.backward(add(t, x, affine(t, x, 4.0, 0.0)));
  CHECK(t.grad(x)(0, 0) == doctest::Approx(5.0));
}
