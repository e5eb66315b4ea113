#pragma once

// Dataset recipes and generation: pulse sequences, randomization, Monte Carlo
// labels, and the seeded train/test split.

#include "gbq/pulse.hpp"
#include "gbq/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gbq {

enum class DatasetId {
  CPMG_G_X_28,
  CPMG_S_X_28,
  CPMG_G_XY_7,
  CPMG_G_XY_pi_7,
  CPMG_G_XY_7_nl,
  CPMG_G_XY_pi_7_nl,
  // Single-axis Gaussian CPMG up to order 50 at pi power; used to train the
  // model that feeds spectroscopy.
  CPMG_G_X_pi_50,
};

enum class Scale { Paper, Desk };

std::string to_string(DatasetId id);
std::optional<DatasetId> parse_dataset_id(const std::string& name);
std::vector<std::string> dataset_names();
std::string to_string(Scale s);
std::optional<Scale> parse_scale(const std::string& s);

struct DatasetRecipe {
  DatasetId id = DatasetId::CPMG_G_X_28;
  PulseShape shape = PulseShape::Gaussian;
  std::vector<Axis> control_axes{Axis::X};
  bool noise_x = false;
  bool noise_z = true;
  int max_order = 28;
  int instances = 100;  // per order configuration
  std::size_t n_train = 2100;
  std::size_t n_test = 700;
  RandomizationConfig randomization{};
};

DatasetRecipe make_recipe(DatasetId id, Scale scale);

/// Table I parameters; the desk profile keeps M and K and only shrinks counts.
SimulationConfig make_sim_config(const DatasetRecipe& recipe, Scale scale);

struct DatasetHeader {
  std::string name;
  std::string scale;
  std::string split;
  std::uint64_t seed = 0;
  SimulationConfig sim;
  PulseShape shape = PulseShape::Gaussian;
  std::vector<Axis> control_axes;
  int n_max = 0;
  FeatureScale feature_scale;
  RandomizationConfig randomization;
  std::size_t unused = 0;  // generated configurations left out of both splits
};

struct DatasetExample {
  std::size_t id = 0;
  std::vector<int> orders;  // per control axis
  PulseSequence pulses;
  std::vector<std::vector<double>> features;
  Waveform waveform;
  MeasurementRecord measurements{};
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetExample> examples;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Nominal (non-randomized) pulse sequence for per-axis orders.
PulseSequence nominal_sequence(const DatasetRecipe& recipe, const std::vector<int>& orders,
                               double T, std::size_t M);

FeatureScale feature_scale(const DatasetRecipe& recipe, double T, std::size_t M);

DatasetSplit generate_dataset(const DatasetRecipe& recipe, const SimulationConfig& sim,
                              Scale scale, std::uint64_t seed, Exec exec = Exec::Parallel);

DatasetSplit generate_dataset(DatasetId id, Scale scale, std::uint64_t seed,
                              Exec exec = Exec::Parallel);

/// Recomputes the waveform from the stored features; used for schema checks.
Waveform rediscretize(const DatasetHeader& header, const DatasetExample& ex);

}  // namespace gbq
