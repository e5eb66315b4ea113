#pragma once

// Stationary classical noise synthesized from a single-sideband PSD by random
// phase assignment and an inverse FFT.

#include "gbq/linalg2.hpp"
#include "gbq/rng.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace gbq {

/// Dephasing-axis spectrum: 1/(f+1) plus a Gaussian bump at 20, flat 0.25
/// floor above 50.
double psd_z(double f);

/// Transverse-axis spectrum: (f+1)^-1.5 plus a bump at 15, flat 5/48 floor
/// above 20.
double psd_x(double f);

/// PSD sampled at f_j = j/T for j = 0..M/2-1. The j = 0 entry holds the
/// right limit S(0+).
struct PSDSpec {
  Axis axis = Axis::Z;
  double T = 1.0;
  std::size_t M = 0;
  std::vector<double> values;

  std::size_t bins() const { return values.size(); }
  double frequency(std::size_t j) const { return static_cast<double>(j) / T; }
};

using PsdFunction = double (*)(double);

PSDSpec sample_psd(Axis axis, PsdFunction psd, double T, std::size_t M);

/// Validates grid size and value invariants; throws BadGridSize otherwise.
void validate(const PSDSpec& spec);

struct NoiseRealization {
  Axis axis = Axis::Z;
  std::uint64_t index = 0;
  std::vector<double> samples;
  double max_imag = 0.0;  // imaginary residue of the inverse FFT
};

/// Reusable buffers for the allocation-free synthesis path.
struct NoiseScratch {
  std::vector<std::complex<double>> spectrum;
};

/// Writes one realization into `out` (length M) and returns the largest
/// imaginary residue seen before taking the real part.
double synthesize_noise(const PSDSpec& spec, CounterRng& rng, std::span<double> out,
                        NoiseScratch& scratch);

/// Stream key of realization `index` on `axis` for a given seed; the
/// simulator draws its noise from the same keys.
std::uint64_t noise_key(std::uint64_t seed, std::uint64_t index, Axis axis);

NoiseRealization generate_noise(const PSDSpec& spec, std::uint64_t seed,
                                std::uint64_t index = 0);

}  // namespace gbq
