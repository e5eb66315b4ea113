#pragma once

// Parameterized control pulse trains (Gaussian and square CPMG), their
// randomization, normalized feature view, and time-domain discretization.

#include "gbq/linalg2.hpp"

#include <cstdint>
#include <vector>

namespace gbq {

enum class PulseShape { Gaussian, Square };

struct Pulse {
  double tau = 0.0;        // center, same time units as T
  double amplitude = 0.0;  // angular frequency
  double sigma = 0.0;      // Gaussian std-dev or square full width

  bool operator==(const Pulse&) const = default;
};

/// Pulses applied along one control axis, sorted by center.
struct PulseTrain {
  Axis axis = Axis::X;
  PulseShape shape = PulseShape::Gaussian;
  std::vector<Pulse> pulses;

  bool operator==(const PulseTrain&) const = default;
};

/// All controlled axes of one control sequence.
using PulseSequence = std::vector<PulseTrain>;

/// Samples f_a(t_j) at midpoints t_j = (j + 1/2) T / M for each axis.
struct Waveform {
  double T = 1.0;
  std::size_t M = 0;
  std::vector<double> x, y, z;

  explicit Waveform(double T_ = 1.0, std::size_t M_ = 0)
      : T(T_), M(M_), x(M_, 0.0), y(M_, 0.0), z(M_, 0.0) {}

  double dt() const { return T / static_cast<double>(M); }
  std::vector<double>& axis(Axis a);
  const std::vector<double>& axis(Axis a) const;
};

struct RandomizationConfig {
  bool randomize_positions = true;
  bool randomize_power = true;
  double jitter_sigmas = 6.0;  // delta_tau ~ U[-6 sigma, 6 sigma]
  double power_lo = 0.0;       // delta_A ~ U[power_lo, power_hi]
  double power_hi = 2.0;
  int max_attempts = 100;
};

/// Nominal pulse width used by both CPMG families: 6 T / M.
double nominal_sigma(double T, std::size_t M);
double gaussian_pi_amplitude(double sigma);
double square_pi_amplitude(double sigma);

PulseTrain cpmg_gaussian(int n_max, double T, std::size_t M, Axis axis = Axis::X);
PulseTrain cpmg_square(int n_max, double T, std::size_t M, Axis axis = Axis::X);

/// Position jitter per pulse and one shared amplitude scale per train.
/// Rejection-resamples until the jittered train stays sorted, inside (0, T),
/// and (for square pulses) non-overlapping.
PulseTrain randomize(const PulseTrain& train, double T, const RandomizationConfig& cfg,
                     std::uint64_t key);

double pulse_value(PulseShape shape, const Pulse& p, double t);

void discretize_into(const PulseTrain& train, Waveform& w);
Waveform discretize(const PulseSequence& seq, double T, std::size_t M);

/// Vector-Jacobian product of discretize for one train: returns dL/d(tau, A, sigma)
/// per pulse given dL/df on the train's axis. Square-pulse edges are not
/// differentiable on the grid; their tau/sigma components are zero.
std::vector<Pulse> waveform_vjp(const PulseTrain& train, const Waveform& w,
                                const std::vector<double>& grad_f);

/// Normalization constants for the feature view.
struct FeatureScale {
  double T = 1.0;
  double A_ref = 1.0;
};

/// n_max vectors of width 3 * seq.size(): (tau/T, A/A_ref, sigma/T) per axis,
/// concatenated across axes; zero-padded beyond each train's length.
std::vector<std::vector<double>> normalize_features(const PulseSequence& seq,
                                                    const FeatureScale& scale, int n_max);

/// Inverse of normalize_features for the given axis layout. All-zero pulse
/// slots are treated as padding.
PulseSequence denormalize_features(const std::vector<std::vector<double>>& features,
                                   const std::vector<Axis>& axes, PulseShape shape,
                                   const FeatureScale& scale);

}  // namespace gbq
