#pragma once

// Monte Carlo ground truth for a noisy, controlled qubit.

#include "gbq/linalg2.hpp"
#include "gbq/noise.hpp"
#include "gbq/pulse.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gbq {

enum class Exec { Serial, Parallel };

struct SimulationConfig {
  double T = 1.0;
  std::size_t M = 4096;
  std::size_t K = 1000;
  double omega = 10.0;
  std::optional<PSDSpec> noise_x, noise_y, noise_z;

  bool noiseless() const { return !noise_x && !noise_y && !noise_z; }
  double dt() const { return T / static_cast<double>(M); }
};

void validate(const SimulationConfig& cfg);

constexpr int kNumPreps = 6;
constexpr int kNumObservables = 3;
constexpr int kNumMeasurements = kNumPreps * kNumObservables;

/// 18 expectations ordered prep-major (X+, X-, Y+, Y-, Z+, Z-) then
/// observable (X, Y, Z).
using MeasurementRecord = std::array<double, kNumMeasurements>;

constexpr int record_index(int prep, int observable) { return prep * kNumObservables + observable; }

/// (I +/- sigma_a)/2 for prep index 0..5.
Operator2 initial_state(int prep);
/// sigma_x, sigma_y, sigma_z for observable index 0..2.
Operator2 observable(int obs);
Axis observable_axis(int obs);
std::string prep_name(int prep);

/// Time-ordered product: U = E_{M-1} ... E_1 E_0 with E_j = exp(-i H_j dt).
Operator2 evolve(std::span<const Operator2> hamiltonians, double dt);

/// Same product for traceless generators given by Pauli coefficient arrays.
Operator2 evolve_pauli(std::span<const double> bx, std::span<const double> by,
                       std::span<const double> bz, double dt);

/// tr(U rho U^dagger O) for all 18 prep/measure pairs.
MeasurementRecord measure_all(const Operator2& u);

/// One record per noise realization, realizations 0..cfg.K-1 keyed by
/// (seed, realization, axis). A noiseless config yields a single record.
std::vector<MeasurementRecord> simulate_realizations(const SimulationConfig& cfg,
                                                     const Waveform& w, std::uint64_t seed,
                                                     Exec exec = Exec::Parallel);

/// Pairwise-summed mean of the first `count` records.
MeasurementRecord mean_record(std::span<const MeasurementRecord> records, std::size_t count);

MeasurementRecord simulate(const SimulationConfig& cfg, const Waveform& w, std::uint64_t seed,
                           Exec exec = Exec::Parallel);

struct ConvergenceRow {
  std::size_t K = 0;
  MeasurementRecord record{};
  /// |record(K) - record(K_next)| per observable; absent on the last row.
  std::optional<MeasurementRecord> drift;
};

/// Nested realization sets: every K in the grid reuses the first K draws.
std::vector<ConvergenceRow> convergence_study(const SimulationConfig& cfg, const Waveform& w,
                                              std::span<const std::size_t> k_grid,
                                              std::uint64_t seed, Exec exec = Exec::Parallel);

}  // namespace gbq
