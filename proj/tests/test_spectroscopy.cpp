#include "gbq/error.hpp"
#include "gbq/nnls.hpp"
#include "gbq/spectroscopy.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gbq;

namespace {

double smooth_psd(double f) { return 0.4 / (1.0 + (f / 8.0) * (f / 8.0)) + 0.02; }

}  // namespace

TEST_CASE("nnls: recovers a feasible solution and respects the bound") {
  Eigen::MatrixXd A(4, 3);
  A << 1, 0, 0, 0, 2, 0, 0, 0, 3, 1, 1, 1;
  const Eigen::Vector3d x0(0.5, 1.0, 2.0);
  const auto r = nnls(A, A * x0);
  CHECK(r.converged);
  CHECK((r.x - x0).norm() < 1e-12);

  const Eigen::Vector4d b(-1.0, 2.0, 3.0, 0.0);
  const auto s = nnls(A, b);
  CHECK(s.x.minCoeff() >= 0.0);
  // KKT: gradient non-positive on the active set, zero on the passive set.
  const Eigen::VectorXd w = A.transpose() * (b - A * s.x);
  for (Eigen::Index j = 0; j < 3; ++j) {
    if (s.x(j) > 0.0) {
      CHECK(std::abs(w(j)) < 1e-10);
    } else {
      CHECK(w(j) <= 1e-10);
    }
  }
}

TEST_CASE("nnls_ridge shrinks toward zero") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::Vector3d b(1.0, 2.0, 3.0);
  const auto r = nnls_ridge(A, b, 1.0);
  CHECK((r.x - b / 2.0).norm() < 1e-12);
}

TEST_CASE("probe frequencies increase with order") {
  for (int n = 1; n < 50; ++n) CHECK(probe_frequency(n + 1, 1.0) > probe_frequency(n, 1.0));
  CHECK(probe_frequency(40, 1.0) == 20.0);
}

TEST_CASE("filter function: free evolution keeps only DC") {
  PulseTrain none;
  const auto ff = filter_function(none, 1.0, 256);
  CHECK(ff.weight[0] == doctest::Approx(1.0));
  for (std::size_t k = 1; k < 256; ++k) CHECK(ff.weight[k] < 1e-20);
}

TEST_CASE("filter function: ideal square-wave limit for even CPMG order") {
  // Short pulses: the switching function approaches a +/-1 square wave whose
  // fundamental sits at k = n / 2 with |Y|^2 = (2T / pi)^2.
  const auto ff = filter_function(cpmg_square(8, 1.0, 1 << 16), 1.0, 64);
  CHECK(ff.weight[4] == doctest::Approx(4.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-3));
  CHECK(ff.weight[3] < 1e-6);
  CHECK(ff.weight[12] == doctest::Approx(ff.weight[4] / 9.0).epsilon(1e-2));
}

TEST_CASE("zero PSD gives zero exponent and unit coherence") {
  const auto s = sample_psd(Axis::Z, [](double) { return 0.0; }, 1.0, 1024);
  CHECK(filter_oracle(s, cpmg_gaussian(4, 1.0, 1024), 1.0) == 0.0);
}

TEST_CASE("oracle agrees with Monte Carlo for CPMG-4 under the dephasing PSD") {
  SimulationConfig sim;
  sim.K = 1000;
  sim.noise_z = sample_psd(Axis::Z, psd_z, sim.T, sim.M);
  const std::vector<int> orders{4};
  const auto mc = simulate_coherences(sim, PulseShape::Gaussian, orders, 12);
  const auto orc = oracle_coherences(*sim.noise_z, PulseShape::Gaussian, orders);
  CHECK(std::abs(mc.coherence[0] - orc.coherence[0]) < 3.0 / std::sqrt(1000.0));
  CHECK(mc.reference[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("inversion: zero noise gives a zero spectrum") {
  CoherenceCurve c;
  c.M = 1024;
  for (int n = 1; n <= 10; ++n) {
    c.orders.push_back(n);
    c.frequency.push_back(probe_frequency(n, 1.0));
    c.coherence.push_back(0.97);
    c.reference.push_back(0.97);
  }
  for (auto mode : {InversionMode::Harmonic, InversionMode::Full}) {
    const auto e = invert_as(c, mode);
    for (double v : e.value) CHECK(std::abs(v) < 1e-12);
  }
  c.coherence[3] = -0.1;
  CHECK_THROWS_AS(invert_as(c, InversionMode::Harmonic), Error);
}

TEST_CASE("round trip: smooth PSD through the oracle and back") {
  const auto spec = sample_psd(Axis::Z, smooth_psd, 1.0, 4096);
  std::vector<int> orders;
  for (int n = 1; n <= 30; ++n) orders.push_back(n);
  const auto curve = oracle_coherences(spec, PulseShape::Gaussian, orders);
  const auto full = invert_as(curve, InversionMode::Full);
  const auto harm = invert_as(curve, InversionMode::Harmonic);
  double worst_full = 0.0, worst_harm = 0.0;
  for (std::size_t i = 2; i + 2 < orders.size(); ++i) {
    const double s = smooth_psd(full.frequency[i]);
    worst_full = std::max(worst_full, std::abs(full.value[i] - s) / s);
    worst_harm = std::max(worst_harm, std::abs(harm.value[i] - s) / s);
  }
  CHECK(worst_full < 0.05);
  CHECK(worst_harm < 0.20);
}

TEST_CASE("full inversion: cross-validated ridge grows with coherence noise") {
  const auto spec = sample_psd(Axis::Z, smooth_psd, 1.0, 4096);
  std::vector<int> orders;
  for (int n = 1; n <= 30; ++n) orders.push_back(n);
  const auto clean = oracle_coherences(spec, PulseShape::Gaussian, orders);
  auto noisy = clean;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.003);
  for (double& c : noisy.coherence) c += g(rng);
  const auto a = invert_as(clean, InversionMode::Full);
  const auto b = invert_as(noisy, InversionMode::Full);
  CHECK(b.ridge > 100.0 * a.ridge);
  const auto one = invert_as(clean, InversionMode::Full, 1e-4);
  const auto two = invert_as(clean, InversionMode::Full, 2e-4);
  CHECK(two.ridge == doctest::Approx(2.0 * one.ridge).epsilon(1e-14));
}

TEST_CASE("model coherences refuse orders beyond the training range") {
  ModelConfig c;
  c.n_max = 4;
  c.M = 1024;
  c.feature_scale = {1.0, 2.0 * gaussian_pi_amplitude(nominal_sigma(1.0, 1024))};
  const ModelState m = make_model(c, 1);
  const std::vector<int> ok{1, 4}, bad{5};
  const auto curve = predict_coherences(m, ok);
  CHECK(curve.coherence.size() == 2);
  CHECK(curve.reference[1] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(predict_coherences(m, ok).coherence == curve.coherence);
  CHECK_THROWS_AS(predict_coherences(m, bad), Error);
}
