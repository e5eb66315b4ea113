#include "gbq/noise.hpp"

#include "gbq/error.hpp"
#include "gbq/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gbq {

double psd_z(double f) {
  if (f < 0.0) throw Error(ErrorKind::NegativeFrequency, "psd_z requires f >= 0");
  const double bump = 0.8 * std::exp(-(f - 20.0) * (f - 20.0) / 10.0);
  return (f <= 50.0 ? 1.0 / (f + 1.0) : 0.25) + bump;
}

double psd_x(double f) {
  if (f < 0.0) throw Error(ErrorKind::NegativeFrequency, "psd_x requires f >= 0");
  const double bump = 0.5 * std::exp(-(f - 15.0) * (f - 15.0) / 10.0);
  return (f <= 20.0 ? std::pow(f + 1.0, -1.5) : 5.0 / 48.0) + bump;
}

PSDSpec sample_psd(Axis axis, PsdFunction psd, double T, std::size_t M) {
  if (M < 2 || M % 2 != 0 || !is_power_of_two(M)) {
    throw Error(ErrorKind::BadGridSize, "M must be an even power of two");
  }
  PSDSpec spec;
  spec.axis = axis;
  spec.T = T;
  spec.M = M;
  spec.values.resize(M / 2);
  // Both spectra are continuous from the right at 0, so S(0+) = psd(0).
  for (std::size_t j = 0; j < spec.values.size(); ++j) spec.values[j] = psd(spec.frequency(j));
  return spec;
}

void validate(const PSDSpec& spec) {
  if (spec.M < 2 || !is_power_of_two(spec.M)) {
    throw Error(ErrorKind::BadGridSize, "M must be an even power of two");
  }
  if (spec.values.size() != spec.M / 2) {
    throw Error(ErrorKind::BadGridSize, "PSD must hold exactly M/2 bins");
  }
  if (!(spec.T > 0.0)) throw Error(ErrorKind::BadGridSize, "T must be positive");
  for (double v : spec.values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::BadGridSize, "PSD values must be finite and non-negative");
    }
  }
}

double synthesize_noise(const PSDSpec& spec, CounterRng& rng, std::span<double> out,
                        NoiseScratch& scratch) {
  const std::size_t M = spec.M;
  const std::size_t N = M / 2;
  auto& X = scratch.spectrum;
  X.assign(M, {0.0, 0.0});
  const double scale = static_cast<double>(M) / std::sqrt(spec.T);
  for (std::size_t j = 0; j < N; ++j) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const double amp = scale * std::sqrt(spec.values[j]);
    if (j == 0) {
      // DC must be real for a real signal; keep the real part of the phasor.
      X[0] = {amp * std::cos(phase), 0.0};
    } else {
      X[j] = std::polar(amp, phase);
      X[M - j] = std::conj(X[j]);
    }
  }
  // Nyquist bin X[N] stays zero.
  fft_inplace(X, true);
  double max_imag = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    out[m] = X[m].real();
    max_imag = std::max(max_imag, std::abs(X[m].imag()));
  }
  return max_imag;
}

std::uint64_t noise_key(std::uint64_t seed, std::uint64_t index, Axis axis) {
  return derive_key({seed, static_cast<std::uint64_t>(Stream::Noise), index,
                     static_cast<std::uint64_t>(axis)});
}

NoiseRealization generate_noise(const PSDSpec& spec, std::uint64_t seed, std::uint64_t index) {
  validate(spec);
  NoiseRealization r;
  r.axis = spec.axis;
  r.index = index;
  r.samples.resize(spec.M);
  CounterRng rng(noise_key(seed, index, spec.axis));
  NoiseScratch scratch;
  r.max_imag = synthesize_noise(spec, rng, r.samples, scratch);
  return r;
}

}  // namespace gbq
