#pragma once

// Shared helpers for the test binaries. Random draws here use the standard
// library engine so test inputs never share a generator with the code under test.

#include "gbq/dataset.hpp"
#include "gbq/linalg2.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace gbq::test {

inline Operator2 random_hermitian(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Operator2 h;
  const double a = n(rng), d = n(rng);
  const cplx off(n(rng), n(rng));
  h << a, off, std::conj(off), d;
  return h;
}

/// Haar-ish random unitary from a random Hermitian generator.
inline Operator2 random_unitary(std::mt19937_64& rng) {
  return expm_hermitian(random_hermitian(rng, 2.0), 1.0);
}

/// |a - b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of f at the value referenced by x.
inline double central_difference(const std::function<double()>& f, double& x, double h = 1e-6) {
  const double x0 = x;
  x = x0 + h;
  const double fp = f();
  x = x0 - h;
  const double fm = f();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

/// Small dataset on a coarse grid for fast pipeline tests: single x axis,
/// orders 1..4, two instances each, z noise with K realizations (0: noiseless).
inline DatasetSplit tiny_split(std::size_t K, std::uint64_t seed = 1) {
  DatasetRecipe r = make_recipe(DatasetId::CPMG_G_X_28, Scale::Desk);
  r.max_order = 4;
  r.instances = 2;
  r.n_train = 5;
  r.n_test = 2;
  SimulationConfig sim;
  sim.M = 1024;
  sim.K = K == 0 ? 1 : K;
  if (K > 0) sim.noise_z = sample_psd(Axis::Z, psd_z, sim.T, sim.M);
  return generate_dataset(r, sim, Scale::Desk, seed);
}

}  // namespace gbq::test
