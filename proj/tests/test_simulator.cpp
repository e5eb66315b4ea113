#include "gbq/error.hpp"
#include "gbq/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace gbq;

namespace {

SimulationConfig z_config(std::size_t M, std::size_t K) {
  SimulationConfig c;
  c.M = M;
  c.K = K;
  c.noise_z = sample_psd(Axis::Z, psd_z, c.T, c.M);
  return c;
}

}  // namespace

TEST_CASE("preparations and observables") {
  for (int p = 0; p < kNumPreps; ++p) {
    const Operator2 rho = initial_state(p);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-15);
    CHECK(is_hermitian(rho));
  }
  const auto rec = measure_all(Operator2::Identity());
  CHECK(rec[record_index(0, 0)] == doctest::Approx(1.0));   // X+ on X
  CHECK(rec[record_index(1, 0)] == doctest::Approx(-1.0));  // X- on X
  CHECK(rec[record_index(2, 1)] == doctest::Approx(1.0));   // Y+ on Y
  CHECK(rec[record_index(5, 2)] == doctest::Approx(-1.0));  // Z- on Z
  CHECK(rec[record_index(4, 0)] == doctest::Approx(0.0));
}

TEST_CASE("noiseless free precession gives cos(Omega T)") {
  SimulationConfig c;
  c.M = 4096;
  const auto rec = simulate(c, Waveform(c.T, c.M), 0);
  CHECK(std::abs(rec[record_index(0, 0)] - std::cos(10.0)) < 1e-10);
  CHECK(std::abs(rec[record_index(0, 1)] - std::sin(10.0)) < 1e-10);
  CHECK(simulate_realizations(c, Waveform(c.T, c.M), 0).size() == 1);
}

TEST_CASE("evolve: commuting piecewise Hamiltonian matches the analytic product") {
  const std::size_t M = 500;
  const double dt = 1.0 / M;
  std::vector<Operator2> hs(M);
  double phase = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    const double w = 3.0 + std::sin(0.01 * double(j));
    hs[j] = 0.5 * w * pauli(Axis::Z);
    phase += 0.5 * w * dt;
  }
  const Operator2 u = evolve(hs, dt);
  Operator2 ref = Operator2::Zero();
  ref(0, 0) = std::exp(cplx(0.0, -phase));
  ref(1, 1) = std::exp(cplx(0.0, phase));
  CHECK(distance(u, ref) < 1e-12);
  CHECK(is_unitary(u, 1e-12));
}

TEST_CASE("evolve and evolve_pauli agree") {
  const std::size_t M = 300;
  std::vector<double> bx(M), by(M), bz(M);
  std::vector<Operator2> hs(M);
  for (std::size_t j = 0; j < M; ++j) {
    bx[j] = std::cos(0.1 * double(j));
    by[j] = 0.3;
    bz[j] = std::sin(0.05 * double(j));
    hs[j] = bx[j] * pauli(Axis::X) + by[j] * pauli(Axis::Y) + bz[j] * pauli(Axis::Z);
  }
  CHECK(distance(evolve(hs, 0.01), evolve_pauli(bx, by, bz, 0.01)) < 1e-12);
}

TEST_CASE("Monte Carlo: fixed seed is reproducible and independent of scheduling") {
  const auto c = z_config(1024, 40);
  const Waveform w(c.T, c.M);
  const auto a = simulate(c, w, 17, Exec::Parallel);
  const auto b = simulate(c, w, 17, Exec::Serial);
  CHECK(a == b);
  CHECK_FALSE(a == simulate(c, w, 18, Exec::Serial));
  for (double v : a) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("dephasing noise only shrinks X+ coherence under an echo") {
  const auto c = z_config(1024, 100);
  Waveform w(c.T, c.M);
  const auto rec = simulate(c, w, 3);
  SimulationConfig clean = c;
  clean.noise_z.reset();
  const auto ref = simulate(clean, w, 3);
  // Pure z noise conserves <Z>.
  CHECK(rec[record_index(4, 2)] == doctest::Approx(1.0).epsilon(1e-12));
  const double r = std::hypot(rec[record_index(0, 0)], rec[record_index(0, 1)]);
  CHECK(r < std::hypot(ref[record_index(0, 0)], ref[record_index(0, 1)]));
}

TEST_CASE("convergence study reuses nested realization sets") {
  const auto c = z_config(512, 1);
  const Waveform w(c.T, c.M);
  const std::vector<std::size_t> grid{5, 10, 20};
  const auto rows = convergence_study(c, w, grid, 9);
  REQUIRE(rows.size() == 3);
  SimulationConfig c20 = c;
  c20.K = 20;
  CHECK(rows[2].record == simulate(c20, w, 9));
  SimulationConfig c10 = c;
  c10.K = 10;
  CHECK(rows[1].record == simulate(c10, w, 9));
  CHECK(rows[0].drift.has_value());
  CHECK_FALSE(rows[2].drift.has_value());
  const std::vector<std::size_t> bad{0};
  CHECK_THROWS_AS(convergence_study(c, w, bad, 9), Error);
}

TEST_CASE("validate rejects inconsistent configurations") {
  SimulationConfig c = z_config(1024, 10);
  c.M = 1000;
  CHECK_THROWS_AS(validate(c), Error);
  c = z_config(1024, 10);
  c.K = 0;
  CHECK_THROWS_AS(validate(c), Error);
}
