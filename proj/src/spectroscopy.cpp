#include "gbq/spectroscopy.hpp"

#include "gbq/error.hpp"
#include "gbq/fft.hpp"
#include "gbq/nnls.hpp"
#include "gbq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace gbq {

namespace {

// Accumulated rotation angle int_0^t f(s) ds of one train, in closed form.
double theta_at(const PulseTrain& train, double t) {
  double th = 0.0;
  for (const Pulse& p : train.pulses) {
    if (train.shape == PulseShape::Gaussian) {
      const double s = std::sqrt(2.0) * p.sigma;
      th += p.amplitude * p.sigma * std::sqrt(std::numbers::pi / 2.0) *
            (std::erf((t - p.tau) / s) - std::erf(-p.tau / s));
    } else {
      th += p.amplitude * std::clamp(t - (p.tau - 0.5 * p.sigma), 0.0, p.sigma);
    }
  }
  return th;
}

std::vector<double> weights_at(const PulseTrain& train, double T, std::size_t bins,
                               std::size_t N) {
  std::vector<std::complex<double>> yz(N), yy(N);
  const double h = T / static_cast<double>(N);
  for (std::size_t j = 0; j < N; ++j) {
    const double th = theta_at(train, (static_cast<double>(j) + 0.5) * h);
    yz[j] = std::cos(th);
    yy[j] = std::sin(th);
  }
  fft_inplace(yz, false);
  fft_inplace(yy, false);
  std::vector<double> w(bins);
  for (std::size_t k = 0; k < bins; ++k) w[k] = h * h * (std::norm(yz[k]) + std::norm(yy[k]));
  return w;
}

void check_orders(std::span<const int> orders, int n_max) {
  if (orders.empty()) throw Error(ErrorKind::Usage, "no CPMG orders requested");
  for (int n : orders) {
    if (n < 1 || n > n_max) {
      throw Error(ErrorKind::OrderOutOfRange,
                  "CPMG order " + std::to_string(n) + " outside 1.." + std::to_string(n_max));
    }
  }
}

constexpr int kPrepXPlus = 0;
// Ridge search range, log10 relative to ||A||_F^2 / K.
constexpr double kGcvLo = -9.0;
constexpr double kGcvHi = 1.0;
constexpr int kGcvSteps = 40;
constexpr int kObsX = 0;

}  // namespace

double probe_frequency(int order, double T) { return order / (2.0 * T); }

PulseTrain probe_train(PulseShape shape, int order, double T, std::size_t M) {
  return shape == PulseShape::Gaussian ? cpmg_gaussian(order, T, M, Axis::X)
                                       : cpmg_square(order, T, M, Axis::X);
}

FilterFunction filter_function(const PulseTrain& train, double T, std::size_t bins,
                               double rel_tol) {
  if (bins == 0 || !is_power_of_two(bins)) {
    throw Error(ErrorKind::BadGridSize, "filter function needs a power-of-two bin count");
  }
  FilterFunction ff;
  ff.T = T;
  // Refine the quadrature until the weights stop moving.
  int r = 2;
  std::vector<double> prev = weights_at(train, T, bins, 2 * bins * static_cast<std::size_t>(r));
  for (r = 4; r <= 256; r *= 2) {
    auto cur = weights_at(train, T, bins, 2 * bins * static_cast<std::size_t>(r));
    double diff = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      diff = std::max(diff, std::abs(cur[k] - prev[k]));
      scale = std::max(scale, cur[k]);
    }
    prev = std::move(cur);
    if (diff <= rel_tol * std::max(scale, 1e-300)) break;
  }
  ff.refine = 2 * std::min(r, 256);
  ff.weight = std::move(prev);
  return ff;
}

double dephasing_exponent(const PSDSpec& spec, const FilterFunction& ff) {
  if (ff.weight.size() < spec.bins()) {
    throw Error(ErrorKind::ShapeMismatch, "filter function shorter than the PSD grid");
  }
  double chi = spec.values.empty() ? 0.0 : spec.values[0] * ff.weight[0] / (4.0 * spec.T);
  for (std::size_t k = 1; k < spec.bins(); ++k) chi += spec.values[k] * ff.weight[k] / spec.T;
  return chi;
}

double filter_oracle(const PSDSpec& spec, const PulseTrain& train, double T) {
  return dephasing_exponent(spec, filter_function(train, T, spec.bins()));
}

CoherenceCurve predict_coherences(const ModelState& m, std::span<const int> orders) {
  const ModelConfig& cfg = m.config;
  check_orders(orders, cfg.n_max);
  if (std::find(cfg.control_axes.begin(), cfg.control_axes.end(), Axis::X) ==
      cfg.control_axes.end()) {
    throw Error(ErrorKind::ShapeMismatch, "model has no x control axis");
  }
  CoherenceCurve c;
  c.T = cfg.T;
  c.M = cfg.M;
  c.shape = cfg.shape;
  c.source = "model";
  for (int n : orders) {
    PulseSequence seq;
    for (Axis a : cfg.control_axes) {
      PulseTrain t = a == Axis::X ? probe_train(cfg.shape, n, cfg.T, cfg.M) : PulseTrain{};
      t.axis = a;
      t.shape = cfg.shape;
      seq.push_back(std::move(t));
    }
    const Waveform w = discretize(seq, cfg.T, cfg.M);
    const Operator2 u = control_unitary(w, cfg.omega);
    const auto rec = predict(m, normalize_features(seq, cfg.feature_scale, cfg.n_max), u);
    c.orders.push_back(n);
    c.frequency.push_back(probe_frequency(n, cfg.T));
    c.coherence.push_back(rec[record_index(kPrepXPlus, kObsX)]);
    c.reference.push_back(measure_all(u)[record_index(kPrepXPlus, kObsX)]);
  }
  return c;
}

CoherenceCurve simulate_coherences(const SimulationConfig& sim, PulseShape shape,
                                   std::span<const int> orders, std::uint64_t seed, Exec exec) {
  check_orders(orders, static_cast<int>(sim.M));
  SimulationConfig clean = sim;
  clean.noise_x.reset();
  clean.noise_y.reset();
  clean.noise_z.reset();
  CoherenceCurve c;
  c.T = sim.T;
  c.M = sim.M;
  c.shape = shape;
  c.source = "simulation";
  for (int n : orders) {
    const Waveform w = discretize({probe_train(shape, n, sim.T, sim.M)}, sim.T, sim.M);
    const auto key = derive_key({seed, static_cast<std::uint64_t>(n)});
    c.orders.push_back(n);
    c.frequency.push_back(probe_frequency(n, sim.T));
    c.coherence.push_back(simulate(sim, w, key, exec)[record_index(kPrepXPlus, kObsX)]);
    c.reference.push_back(simulate(clean, w, key, exec)[record_index(kPrepXPlus, kObsX)]);
  }
  return c;
}

CoherenceCurve oracle_coherences(const PSDSpec& spec, PulseShape shape,
                                 std::span<const int> orders) {
  check_orders(orders, static_cast<int>(spec.M));
  CoherenceCurve c;
  c.T = spec.T;
  c.M = spec.M;
  c.shape = shape;
  c.source = "oracle";
  for (int n : orders) {
    c.orders.push_back(n);
    c.frequency.push_back(probe_frequency(n, spec.T));
    c.coherence.push_back(std::exp(-filter_oracle(spec, probe_train(shape, n, spec.T, spec.M), spec.T)));
    c.reference.push_back(1.0);
  }
  return c;
}

std::string to_string(InversionMode m) { return m == InversionMode::Harmonic ? "harmonic" : "full"; }

InversionMode parse_inversion_mode(const std::string& s) {
  if (s == "harmonic") return InversionMode::Harmonic;
  if (s == "full") return InversionMode::Full;
  throw Error(ErrorKind::Usage, "unknown inversion mode '" + s + "' (expected harmonic or full)");
}

SpectrumEstimate invert_as(const CoherenceCurve& curve, InversionMode mode, double ridge_rel) {
  const std::size_t n = curve.orders.size();
  if (n == 0 || curve.coherence.size() != n || curve.reference.size() != n ||
      curve.frequency.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "coherence curve arrays disagree");
  }
  SpectrumEstimate est;
  est.mode = mode;
  est.frequency = curve.frequency;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(curve.coherence[i] > 0.0) || !(curve.reference[i] > 0.0)) {
      throw Error(ErrorKind::NonPositiveCoherence,
                  "order " + std::to_string(curve.orders[i]) + " has coherence " +
                      std::to_string(curve.coherence[i]) + " against reference " +
                      std::to_string(curve.reference[i]));
    }
    est.chi.push_back(-std::log(curve.coherence[i] / curve.reference[i]));
  }

  std::vector<double> raw(n);
  if (mode == InversionMode::Harmonic) {
    const double c = std::numbers::pi * std::numbers::pi / (4.0 * curve.T);
    for (std::size_t i = 0; i < n; ++i) raw[i] = est.chi[i] * c;
  } else {
    if (curve.M < 2) throw Error(ErrorKind::BadGridSize, "full inversion needs the time grid");
    const std::size_t bins = curve.M / 2;
    const double f_top = *std::max_element(curve.frequency.begin(), curve.frequency.end());
    const auto K = static_cast<Eigen::Index>(
        std::clamp<double>(std::floor(f_top * curve.T + 1e-9), 1.0, static_cast<double>(bins - 1)));
    // Unknowns run to 3 f_top so third harmonics land on their own bins; the
    // rest of the tail is lumped on the last one.
    const Eigen::Index Ke = std::min<Eigen::Index>(3 * K, static_cast<Eigen::Index>(bins - 1));
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), Ke);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ff = filter_function(probe_train(curve.shape, curve.orders[i], curve.T, curve.M),
                                      curve.T, bins);
      const auto r = static_cast<Eigen::Index>(i);
      A(r, 0) += ff.weight[0] / (4.0 * curve.T);
      for (std::size_t k = 1; k < bins; ++k) {
        A(r, std::min<Eigen::Index>(static_cast<Eigen::Index>(k), Ke) - 1) += ff.weight[k] / curve.T;
      }
    }
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(est.chi.data(), static_cast<Eigen::Index>(n));
    // Ridge on first differences above f_top: the tail is only seen through
    // harmonics, so it follows its neighbours.
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(Ke - K, 1), Ke);
    for (Eigen::Index k = K - 1; k + 1 < Ke; ++k) {
      D(k - K + 1, k) = -1.0;
      D(k - K + 1, k + 1) = 1.0;
    }
    const double scale = A.squaredNorm() / static_cast<double>(K);
    const Eigen::MatrixXd AtA = A.transpose() * A;
    const Eigen::MatrixXd DtD = D.transpose() * D;
    const Eigen::VectorXd Atb = A.transpose() * b;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(Ke, Ke);
    auto normal = [&](double lam) { return Eigen::MatrixXd(AtA + lam * DtD + 1e-12 * scale * eye); };
    if (ridge_rel > 0.0) {
      est.ridge = ridge_rel * scale;
    } else {
      // Generalized cross-validation on the unconstrained smoother.
      const auto rows = static_cast<double>(n);
      double best = std::numeric_limits<double>::infinity();
      for (int e = 0; e <= kGcvSteps; ++e) {
        const double lam = scale * std::pow(10.0, kGcvLo + (kGcvHi - kGcvLo) * e / kGcvSteps);
        const Eigen::MatrixXd H = A * normal(lam).ldlt().solve(A.transpose());
        const double dof = rows - H.trace();
        const double g = rows * (b - H * b).squaredNorm() / (dof * dof);
        if (g < best) {
          best = g;
          est.ridge = lam;
        }
      }
    }
    const auto sol = nnls_tikhonov(A, b, std::sqrt(est.ridge) * D);
    est.residual = sol.residual;
    const Eigen::VectorXd unclipped = normal(est.ridge).ldlt().solve(Atb);

    auto interp = [&](const Eigen::VectorXd& s, double f) {
      const double x = f * curve.T;
      if (x <= 1.0) return s(0);
      if (x >= static_cast<double>(K)) return s(K - 1);
      const auto lo = static_cast<Eigen::Index>(std::floor(x));
      const double a = x - static_cast<double>(lo);
      return (1.0 - a) * s(lo - 1) + a * s(std::min<Eigen::Index>(lo, K - 1));
    };
    est.min_before_clip = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = interp(sol.x, curve.frequency[i]);
      est.min_before_clip = std::min(est.min_before_clip, interp(unclipped, curve.frequency[i]));
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      est.grid_frequency.push_back(static_cast<double>(k + 1) / curve.T);
      est.grid_value.push_back(sol.x(k));
    }
  }

  if (mode == InversionMode::Harmonic) est.min_before_clip = *std::min_element(raw.begin(), raw.end());
  est.value.resize(n);
  for (std::size_t i = 0; i < n; ++i) est.value[i] = std::max(raw[i], 0.0);
  return est;
}

}  // namespace gbq
