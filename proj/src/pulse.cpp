#include "gbq/pulse.hpp"

#include "gbq/error.hpp"
#include "gbq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gbq {

namespace {

// Gaussian samples are evaluated within this many std-devs of the center;
// beyond it exp(-x^2/2) < 1e-31.
constexpr double kGaussianWindow = 12.0;

PulseTrain cpmg(PulseShape shape, int n_max, double T, std::size_t M, Axis axis) {
  if (n_max < 0) throw Error(ErrorKind::PulsesOverlap, "negative CPMG order");
  PulseTrain train;
  train.axis = axis;
  train.shape = shape;
  if (n_max == 0) return train;
  const double sigma = nominal_sigma(T, M);
  if (6.0 * sigma * n_max >= T) {
    throw Error(ErrorKind::PulsesOverlap, "pulses do not fit in [0, T]");
  }
  if (n_max >= 2 && T / n_max < 12.0 * sigma) {
    throw Error(ErrorKind::PulsesOverlap, "CPMG spacing is below 12 sigma");
  }
  const double amp =
      shape == PulseShape::Gaussian ? gaussian_pi_amplitude(sigma) : square_pi_amplitude(sigma);
  for (int n = 1; n <= n_max; ++n) {
    train.pulses.push_back({(n - 0.5) / n_max * T, amp, sigma});
  }
  return train;
}

bool valid_layout(const PulseTrain& train, double T) {
  const auto& p = train.pulses;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i].tau > 0.0 && p[i].tau < T)) return false;
    if (i > 0 && !(p[i].tau > p[i - 1].tau)) return false;
    if (train.shape == PulseShape::Square) {
      if (p[i].tau - 0.5 * p[i].sigma < 0.0 || p[i].tau + 0.5 * p[i].sigma > T) return false;
      if (i > 0 && p[i].tau - 0.5 * p[i].sigma < p[i - 1].tau + 0.5 * p[i - 1].sigma) {
        return false;
      }
    }
  }
  return true;
}

std::uint64_t axis_word(Axis a) { return static_cast<std::uint64_t>(a); }

}  // namespace

std::vector<double>& Waveform::axis(Axis a) {
  switch (a) {
    case Axis::X: return x;
    case Axis::Y: return y;
    case Axis::Z: return z;
    case Axis::I: break;
  }
  throw Error(ErrorKind::ShapeMismatch, "waveform has no identity axis");
}

const std::vector<double>& Waveform::axis(Axis a) const {
  return const_cast<Waveform*>(this)->axis(a);
}

double nominal_sigma(double T, std::size_t M) { return 6.0 * T / static_cast<double>(M); }

double gaussian_pi_amplitude(double sigma) {
  return std::numbers::pi / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
}

double square_pi_amplitude(double sigma) { return std::numbers::pi / sigma; }

PulseTrain cpmg_gaussian(int n_max, double T, std::size_t M, Axis axis) {
  return cpmg(PulseShape::Gaussian, n_max, T, M, axis);
}

PulseTrain cpmg_square(int n_max, double T, std::size_t M, Axis axis) {
  return cpmg(PulseShape::Square, n_max, T, M, axis);
}

PulseTrain randomize(const PulseTrain& train, double T, const RandomizationConfig& cfg,
                     std::uint64_t key) {
  if (!cfg.randomize_positions && !cfg.randomize_power) return train;
  PulseTrain out = train;
  if (cfg.randomize_power) {
    CounterRng rng(derive_key({key, static_cast<std::uint64_t>(Stream::Power),
                               axis_word(train.axis)}));
    const double scale = rng.uniform(cfg.power_lo, cfg.power_hi);
    for (auto& p : out.pulses) p.amplitude *= scale;
  }
  if (!cfg.randomize_positions) return out;
  CounterRng rng(
      derive_key({key, static_cast<std::uint64_t>(Stream::Jitter), axis_word(train.axis)}));
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    for (std::size_t i = 0; i < out.pulses.size(); ++i) {
      const double w = cfg.jitter_sigmas * train.pulses[i].sigma;
      out.pulses[i].tau = train.pulses[i].tau + rng.uniform(-w, w);
    }
    if (valid_layout(out, T)) return out;
  }
  throw Error(ErrorKind::RandomizationFailed, "no valid jittered layout after max attempts");
}

double pulse_value(PulseShape shape, const Pulse& p, double t) {
  const double d = t - p.tau;
  if (shape == PulseShape::Gaussian) {
    return p.amplitude * std::exp(-d * d / (2.0 * p.sigma * p.sigma));
  }
  return (std::abs(d) <= 0.5 * p.sigma) ? p.amplitude : 0.0;
}

namespace {

// Index range [lo, hi) of midpoint samples that can be nonzero for a pulse.
std::pair<std::size_t, std::size_t> support(PulseShape shape, const Pulse& p, double dt,
                                            std::size_t M) {
  const double half = shape == PulseShape::Gaussian ? kGaussianWindow * p.sigma : 0.5 * p.sigma;
  const double lo = std::floor((p.tau - half) / dt - 0.5) - 1.0;
  const double hi = std::ceil((p.tau + half) / dt - 0.5) + 2.0;
  const auto clamp = [M](double v) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(M)));
  };
  return {clamp(lo), clamp(hi)};
}

}  // namespace

void discretize_into(const PulseTrain& train, Waveform& w) {
  auto& f = w.axis(train.axis);
  const double dt = w.dt();
  for (const auto& p : train.pulses) {
    const auto [lo, hi] = support(train.shape, p, dt, w.M);
    for (std::size_t j = lo; j < hi; ++j) {
      f[j] += pulse_value(train.shape, p, (static_cast<double>(j) + 0.5) * dt);
    }
  }
}

Waveform discretize(const PulseSequence& seq, double T, std::size_t M) {
  Waveform w(T, M);
  for (const auto& train : seq) discretize_into(train, w);
  return w;
}

std::vector<Pulse> waveform_vjp(const PulseTrain& train, const Waveform& w,
                                const std::vector<double>& grad_f) {
  std::vector<Pulse> out(train.pulses.size());
  const double dt = w.dt();
  for (std::size_t n = 0; n < train.pulses.size(); ++n) {
    const Pulse& p = train.pulses[n];
    const auto [lo, hi] = support(train.shape, p, dt, w.M);
    for (std::size_t j = lo; j < hi; ++j) {
      const double t = (static_cast<double>(j) + 0.5) * dt;
      const double g = grad_f[j];
      if (train.shape == PulseShape::Gaussian) {
        const double d = t - p.tau;
        const double e = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
        out[n].amplitude += g * e;
        out[n].tau += g * p.amplitude * e * d / (p.sigma * p.sigma);
        out[n].sigma += g * p.amplitude * e * d * d / (p.sigma * p.sigma * p.sigma);
      } else if (std::abs(t - p.tau) <= 0.5 * p.sigma) {
        out[n].amplitude += g;
      }
    }
  }
  return out;
}

std::vector<std::vector<double>> normalize_features(const PulseSequence& seq,
                                                    const FeatureScale& scale, int n_max) {
  const std::size_t r = 3 * seq.size();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n_max),
                                       std::vector<double>(r, 0.0));
  for (std::size_t a = 0; a < seq.size(); ++a) {
    const auto& pulses = seq[a].pulses;
    if (pulses.size() > static_cast<std::size_t>(n_max)) {
      throw Error(ErrorKind::ShapeMismatch, "pulse train longer than n_max");
    }
    for (std::size_t n = 0; n < pulses.size(); ++n) {
      out[n][3 * a + 0] = pulses[n].tau / scale.T;
      out[n][3 * a + 1] = pulses[n].amplitude / scale.A_ref;
      out[n][3 * a + 2] = pulses[n].sigma / scale.T;
    }
  }
  return out;
}

PulseSequence denormalize_features(const std::vector<std::vector<double>>& features,
                                   const std::vector<Axis>& axes, PulseShape shape,
                                   const FeatureScale& scale) {
  PulseSequence seq;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    PulseTrain train;
    train.axis = axes[a];
    train.shape = shape;
    for (const auto& v : features) {
      if (v.size() != 3 * axes.size()) {
        throw Error(ErrorKind::ShapeMismatch, "feature width does not match axis layout");
      }
      const double tau = v[3 * a], amp = v[3 * a + 1], sig = v[3 * a + 2];
      if (tau == 0.0 && amp == 0.0 && sig == 0.0) continue;
      train.pulses.push_back({tau * scale.T, amp * scale.A_ref, sig * scale.T});
    }
    seq.push_back(std::move(train));
  }
  return seq;
}

}  // namespace gbq
