#pragma once

// Dephasing noise spectroscopy from CPMG coherence decay, plus a
// filter-function oracle that predicts the decay from a known PSD.

#include "gbq/graybox.hpp"
#include "gbq/noise.hpp"
#include "gbq/pulse.hpp"
#include "gbq/simulator.hpp"

#include <span>
#include <string>
#include <vector>

namespace gbq {

/// Probe frequency of CPMG order n: n / (2T).
double probe_frequency(int order, double T);

/// Ideal (pi-power, evenly spaced) CPMG train on x.
PulseTrain probe_train(PulseShape shape, int order, double T, std::size_t M);

/// Squared Fourier magnitudes of the toggling-frame switching functions
/// cos(theta(t)) and sin(theta(t)), theta the accumulated pulse angle:
/// weight[k] = |Y_z(k/T)|^2 + |Y_y(k/T)|^2 for k = 0..bins-1.
struct FilterFunction {
  double T = 1.0;
  int refine = 0;  // quadrature points per noise-grid cell at convergence
  std::vector<double> weight;
};

FilterFunction filter_function(const PulseTrain& train, double T, std::size_t bins,
                               double rel_tol = 1e-8);

/// Gaussian dephasing exponent on the noise grid: coherence = exp(-chi).
double dephasing_exponent(const PSDSpec& spec, const FilterFunction& ff);
double filter_oracle(const PSDSpec& spec, const PulseTrain& train, double T);

struct CoherenceCurve {
  double T = 1.0;
  std::size_t M = 0;
  PulseShape shape = PulseShape::Gaussian;
  std::string source;  // "model", "simulation" or "oracle"
  std::vector<int> orders;
  std::vector<double> frequency;
  std::vector<double> coherence;  // <X> for the X+ preparation
  std::vector<double> reference;  // same without noise
};

/// Runs the model on ideal CPMG sequences of the given orders.
CoherenceCurve predict_coherences(const ModelState& m, std::span<const int> orders);
/// Monte Carlo ground truth for the same probes.
CoherenceCurve simulate_coherences(const SimulationConfig& sim, PulseShape shape,
                                   std::span<const int> orders, std::uint64_t seed,
                                   Exec exec = Exec::Parallel);
/// exp(-chi) from the filter-function oracle, reference 1.
CoherenceCurve oracle_coherences(const PSDSpec& spec, PulseShape shape,
                                 std::span<const int> orders);

enum class InversionMode { Harmonic, Full };
std::string to_string(InversionMode m);
InversionMode parse_inversion_mode(const std::string& s);

struct SpectrumEstimate {
  InversionMode mode = InversionMode::Harmonic;
  std::vector<double> frequency;  // probe frequencies
  std::vector<double> value;      // clipped at zero
  std::vector<double> chi;
  double min_before_clip = 0.0;
  // Full mode only: solution on the integer noise grid k / T, k >= 1.
  std::vector<double> grid_frequency;
  std::vector<double> grid_value;
  double ridge = 0.0;  // absolute ridge weight used
  double residual = 0.0;
};

/// Harmonic: S(f_n) = chi_n pi^2 / (4T). Full: non-negative solve of A s = chi
/// with A built from filter functions, unknowns up to three times the highest
/// probe frequency and a ridge on neighbour differences in that tail. The
/// ridge is ridge_rel ||A||_F^2 / K when ridge_rel > 0, otherwise chosen by
/// generalized cross-validation.
SpectrumEstimate invert_as(const CoherenceCurve& curve, InversionMode mode,
                           double ridge_rel = 0.0);

}  // namespace gbq
