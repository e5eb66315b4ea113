#include "gbq/dataset.hpp"

#include "gbq/error.hpp"
#include "gbq/rng.hpp"

#include <algorithm>
#include <numeric>

namespace gbq {

namespace {

struct NamedId {
  DatasetId id;
  const char* name;
};

constexpr NamedId kNames[] = {
    {DatasetId::CPMG_G_X_28, "CPMG_G_X_28"},
    {DatasetId::CPMG_S_X_28, "CPMG_S_X_28"},
    {DatasetId::CPMG_G_XY_7, "CPMG_G_XY_7"},
    {DatasetId::CPMG_G_XY_pi_7, "CPMG_G_XY_pi_7"},
    {DatasetId::CPMG_G_XY_7_nl, "CPMG_G_XY_7_nl"},
    {DatasetId::CPMG_G_XY_pi_7_nl, "CPMG_G_XY_pi_7_nl"},
    {DatasetId::CPMG_G_X_pi_50, "CPMG_G_X_pi_50"},
};

// Order tuples for every configuration of a recipe, one entry per control axis.
std::vector<std::vector<int>> configurations(const DatasetRecipe& r) {
  std::vector<std::vector<int>> out;
  if (r.control_axes.size() == 1) {
    for (int n = 1; n <= r.max_order; ++n) out.push_back({n});
  } else {
    for (int nx = 1; nx <= r.max_order; ++nx) {
      for (int ny = 1; ny <= r.max_order; ++ny) out.push_back({nx, ny});
    }
  }
  return out;
}

}  // namespace

std::string to_string(DatasetId id) {
  for (const auto& n : kNames) {
    if (n.id == id) return n.name;
  }
  return "unknown";
}

std::optional<DatasetId> parse_dataset_id(const std::string& name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.id;
  }
  return std::nullopt;
}

std::vector<std::string> dataset_names() {
  std::vector<std::string> out;
  for (const auto& n : kNames) out.emplace_back(n.name);
  return out;
}

std::string to_string(Scale s) { return s == Scale::Paper ? "paper" : "desk"; }

std::optional<Scale> parse_scale(const std::string& s) {
  if (s == "paper") return Scale::Paper;
  if (s == "desk") return Scale::Desk;
  return std::nullopt;
}

DatasetRecipe make_recipe(DatasetId id, Scale scale) {
  DatasetRecipe r;
  r.id = id;
  const bool desk = scale == Scale::Desk;
  switch (id) {
    case DatasetId::CPMG_G_X_28:
    case DatasetId::CPMG_S_X_28:
      r.shape = id == DatasetId::CPMG_S_X_28 ? PulseShape::Square : PulseShape::Gaussian;
      r.control_axes = {Axis::X};
      r.noise_x = false;
      r.noise_z = true;
      r.max_order = 28;
      r.instances = desk ? 10 : 100;
      r.n_train = desk ? 210 : 2100;
      r.n_test = desk ? 70 : 700;
      break;
    case DatasetId::CPMG_G_XY_7:
    case DatasetId::CPMG_G_XY_pi_7:
    case DatasetId::CPMG_G_XY_7_nl:
    case DatasetId::CPMG_G_XY_pi_7_nl: {
      const bool nl = id == DatasetId::CPMG_G_XY_7_nl || id == DatasetId::CPMG_G_XY_pi_7_nl;
      const bool pi = id == DatasetId::CPMG_G_XY_pi_7 || id == DatasetId::CPMG_G_XY_pi_7_nl;
      r.shape = PulseShape::Gaussian;
      r.control_axes = {Axis::X, Axis::Y};
      r.noise_x = !nl;
      r.noise_z = !nl;
      r.max_order = 7;
      r.randomization.randomize_power = !pi;
      r.instances = desk ? 10 : 100;
      // 4900 generated; the listed splits use 4850 of them.
      r.n_train = desk ? 362 : 3625;
      r.n_test = desk ? 122 : 1225;
      break;
    }
    case DatasetId::CPMG_G_X_pi_50:
      r.shape = PulseShape::Gaussian;
      r.control_axes = {Axis::X};
      r.noise_x = false;
      r.noise_z = true;
      r.max_order = 50;
      // Plain CPMG: instances differ only in their noise draws. Jittered
      // positions would teach the model a jitter-averaged filter instead.
      r.randomization.randomize_positions = false;
      r.randomization.randomize_power = false;
      r.instances = desk ? 10 : 100;
      r.n_train = desk ? 375 : 3750;
      r.n_test = desk ? 125 : 1250;
      break;
  }
  return r;
}

SimulationConfig make_sim_config(const DatasetRecipe& recipe, Scale) {
  SimulationConfig cfg;
  cfg.T = 1.0;
  cfg.M = 4096;
  cfg.K = 1000;
  cfg.omega = 10.0;
  if (recipe.noise_z) cfg.noise_z = sample_psd(Axis::Z, psd_z, cfg.T, cfg.M);
  if (recipe.noise_x) cfg.noise_x = sample_psd(Axis::X, psd_x, cfg.T, cfg.M);
  return cfg;
}

PulseSequence nominal_sequence(const DatasetRecipe& recipe, const std::vector<int>& orders,
                               double T, std::size_t M) {
  if (orders.size() != recipe.control_axes.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one order per control axis expected");
  }
  PulseSequence seq;
  for (std::size_t a = 0; a < orders.size(); ++a) {
    seq.push_back(recipe.shape == PulseShape::Gaussian
                      ? cpmg_gaussian(orders[a], T, M, recipe.control_axes[a])
                      : cpmg_square(orders[a], T, M, recipe.control_axes[a]));
  }
  return seq;
}

FeatureScale feature_scale(const DatasetRecipe& recipe, double T, std::size_t M) {
  const double sigma = nominal_sigma(T, M);
  const double nominal = recipe.shape == PulseShape::Gaussian ? gaussian_pi_amplitude(sigma)
                                                              : square_pi_amplitude(sigma);
  return {T, 2.0 * nominal};
}

DatasetSplit generate_dataset(const DatasetRecipe& recipe, const SimulationConfig& sim,
                              Scale scale, std::uint64_t seed, Exec exec) {
  validate(sim);
  const auto configs = configurations(recipe);
  const std::size_t total = configs.size() * static_cast<std::size_t>(recipe.instances);
  if (recipe.n_train + recipe.n_test > total) {
    throw Error(ErrorKind::DatasetSchemaError, "requested split exceeds generated examples");
  }

  // Seeded partition first so unused examples are never simulated.
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng split_rng(derive_key({seed, static_cast<std::uint64_t>(Stream::Split)}));
  for (std::size_t i = total; i > 1; --i) {
    const std::size_t j = split_rng.below(i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::size_t> test_ids(order.begin(), order.begin() + recipe.n_test);
  std::vector<std::size_t> train_ids(order.begin() + recipe.n_test,
                                     order.begin() + recipe.n_test + recipe.n_train);
  std::sort(test_ids.begin(), test_ids.end());
  std::sort(train_ids.begin(), train_ids.end());

  DatasetHeader header;
  header.name = to_string(recipe.id);
  header.scale = to_string(scale);
  header.seed = seed;
  header.sim = sim;
  header.shape = recipe.shape;
  header.control_axes = recipe.control_axes;
  header.n_max = recipe.max_order;
  header.feature_scale = feature_scale(recipe, sim.T, sim.M);
  header.randomization = recipe.randomization;
  header.unused = total - recipe.n_train - recipe.n_test;

  auto build = [&](std::size_t id) {
    DatasetExample ex;
    ex.id = id;
    ex.seed = derive_key({seed, static_cast<std::uint64_t>(id)});
    ex.orders = configs[id / static_cast<std::size_t>(recipe.instances)];
    for (auto& train : nominal_sequence(recipe, ex.orders, sim.T, sim.M)) {
      ex.pulses.push_back(randomize(train, sim.T, recipe.randomization, ex.seed));
    }
    ex.features = normalize_features(ex.pulses, header.feature_scale, recipe.max_order);
    ex.waveform = discretize(ex.pulses, sim.T, sim.M);
    ex.measurements = simulate(sim, ex.waveform, ex.seed, exec);
    return ex;
  };

  DatasetSplit out;
  out.train.header = header;
  out.train.header.split = "train";
  out.test.header = header;
  out.test.header.split = "test";
  for (std::size_t id : train_ids) out.train.examples.push_back(build(id));
  for (std::size_t id : test_ids) out.test.examples.push_back(build(id));
  return out;
}

DatasetSplit generate_dataset(DatasetId id, Scale scale, std::uint64_t seed, Exec exec) {
  const DatasetRecipe recipe = make_recipe(id, scale);
  return generate_dataset(recipe, make_sim_config(recipe, scale), scale, seed, exec);
}

Waveform rediscretize(const DatasetHeader& header, const DatasetExample& ex) {
  const auto seq =
      denormalize_features(ex.features, header.control_axes, header.shape, header.feature_scale);
  return discretize(seq, header.sim.T, header.sim.M);
}

}  // namespace gbq
