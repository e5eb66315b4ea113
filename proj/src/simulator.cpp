#include "gbq/simulator.hpp"

#include "gbq/error.hpp"
#include "gbq/fft.hpp"
#include "gbq/rng.hpp"

#include <cmath>

namespace gbq {

void validate(const SimulationConfig& cfg) {
  if (!(cfg.T > 0.0)) throw Error(ErrorKind::BadGridSize, "T must be positive");
  if (!is_power_of_two(cfg.M) || cfg.M < 2) {
    throw Error(ErrorKind::BadGridSize, "M must be a power of two");
  }
  if (cfg.K < 1) throw Error(ErrorKind::BadGridSize, "K must be at least 1");
  for (const auto* spec : {&cfg.noise_x, &cfg.noise_y, &cfg.noise_z}) {
    if (!*spec) continue;
    validate(**spec);
    if ((*spec)->M != cfg.M || (*spec)->T != cfg.T) {
      throw Error(ErrorKind::BadGridSize, "noise PSD grid does not match the simulation grid");
    }
  }
}

Operator2 initial_state(int prep) {
  const Axis axes[3] = {Axis::X, Axis::Y, Axis::Z};
  const double sign = (prep % 2 == 0) ? 1.0 : -1.0;
  return 0.5 * (pauli(Axis::I) + sign * pauli(axes[prep / 2]));
}

Axis observable_axis(int obs) {
  const Axis axes[3] = {Axis::X, Axis::Y, Axis::Z};
  return axes[obs];
}

Operator2 observable(int obs) { return pauli(observable_axis(obs)); }

std::string prep_name(int prep) {
  static const char* names[kNumPreps] = {"X+", "X-", "Y+", "Y-", "Z+", "Z-"};
  return names[prep];
}

Operator2 evolve(std::span<const Operator2> hamiltonians, double dt) {
  Operator2 u = Operator2::Identity();
  for (const auto& h : hamiltonians) u = expm_hermitian(h, dt) * u;
  return u;
}

Operator2 evolve_pauli(std::span<const double> bx, std::span<const double> by,
                       std::span<const double> bz, double dt) {
  Operator2 u = Operator2::Identity();
  for (std::size_t j = 0; j < bz.size(); ++j) u = su2_step(bx[j], by[j], bz[j], dt) * u;
  return u;
}

MeasurementRecord measure_all(const Operator2& u) {
  MeasurementRecord rec{};
  for (int p = 0; p < kNumPreps; ++p) {
    const Operator2 evolved = u * initial_state(p) * u.adjoint();
    for (int o = 0; o < kNumObservables; ++o) {
      rec[record_index(p, o)] = std::real((evolved * observable(o)).trace());
    }
  }
  return rec;
}

namespace {

struct RealizationWorkspace {
  std::vector<double> beta_x, beta_y, beta_z;
  std::vector<double> bx, by, bz;
  NoiseScratch scratch;
};

void fill_noise(const std::optional<PSDSpec>& spec, std::uint64_t seed, std::uint64_t k,
                Axis axis, std::vector<double>& out, NoiseScratch& scratch, std::size_t M) {
  out.assign(M, 0.0);
  if (!spec) return;
  CounterRng rng(noise_key(seed, k, axis));
  synthesize_noise(*spec, rng, out, scratch);
}

MeasurementRecord run_realization(const SimulationConfig& cfg, const Waveform& w,
                                  std::uint64_t seed, std::uint64_t k, RealizationWorkspace& ws) {
  const std::size_t M = cfg.M;
  fill_noise(cfg.noise_x, seed, k, Axis::X, ws.beta_x, ws.scratch, M);
  fill_noise(cfg.noise_y, seed, k, Axis::Y, ws.beta_y, ws.scratch, M);
  fill_noise(cfg.noise_z, seed, k, Axis::Z, ws.beta_z, ws.scratch, M);
  ws.bx.resize(M);
  ws.by.resize(M);
  ws.bz.resize(M);
  for (std::size_t j = 0; j < M; ++j) {
    ws.bx[j] = 0.5 * (w.x[j] + ws.beta_x[j]);
    ws.by[j] = 0.5 * (w.y[j] + ws.beta_y[j]);
    ws.bz[j] = 0.5 * (cfg.omega + ws.beta_z[j] + w.z[j]);
  }
  return measure_all(evolve_pauli(ws.bx, ws.by, ws.bz, cfg.dt()));
}

MeasurementRecord pairwise_sum(std::span<const MeasurementRecord> r) {
  MeasurementRecord acc{};
  if (r.size() <= 8) {
    for (const auto& x : r) {
      for (int i = 0; i < kNumMeasurements; ++i) acc[i] += x[i];
    }
    return acc;
  }
  const std::size_t half = r.size() / 2;
  const MeasurementRecord a = pairwise_sum(r.first(half));
  const MeasurementRecord b = pairwise_sum(r.subspan(half));
  for (int i = 0; i < kNumMeasurements; ++i) acc[i] = a[i] + b[i];
  return acc;
}

}  // namespace

std::vector<MeasurementRecord> simulate_realizations(const SimulationConfig& cfg,
                                                     const Waveform& w, std::uint64_t seed,
                                                     Exec exec) {
  validate(cfg);
  if (w.M != cfg.M || w.x.size() != cfg.M || w.y.size() != cfg.M || w.z.size() != cfg.M) {
    throw Error(ErrorKind::ShapeMismatch, "waveform length must equal M");
  }
  const std::size_t K = cfg.noiseless() ? 1 : cfg.K;
  std::vector<MeasurementRecord> out(K);
  if (exec == Exec::Serial) {
    RealizationWorkspace ws;
    for (std::size_t k = 0; k < K; ++k) out[k] = run_realization(cfg, w, seed, k, ws);
    return out;
  }
#pragma omp parallel
  {
    RealizationWorkspace ws;
#pragma omp for schedule(static)
    for (std::size_t k = 0; k < K; ++k) out[k] = run_realization(cfg, w, seed, k, ws);
  }
  return out;
}

MeasurementRecord mean_record(std::span<const MeasurementRecord> records, std::size_t count) {
  if (count == 0 || count > records.size()) {
    throw Error(ErrorKind::ShapeMismatch, "mean over an invalid realization count");
  }
  MeasurementRecord s = pairwise_sum(records.first(count));
  for (auto& v : s) v /= static_cast<double>(count);
  return s;
}

MeasurementRecord simulate(const SimulationConfig& cfg, const Waveform& w, std::uint64_t seed,
                           Exec exec) {
  const auto records = simulate_realizations(cfg, w, seed, exec);
  return mean_record(records, records.size());
}

std::vector<ConvergenceRow> convergence_study(const SimulationConfig& cfg, const Waveform& w,
                                              std::span<const std::size_t> k_grid,
                                              std::uint64_t seed, Exec exec) {
  std::size_t k_max = 0;
  for (std::size_t k : k_grid) {
    if (k == 0) throw Error(ErrorKind::BadGridSize, "K grid entries must be positive");
    k_max = std::max(k_max, k);
  }
  SimulationConfig big = cfg;
  big.K = k_max;
  const auto records = simulate_realizations(big, w, seed, exec);
  std::vector<ConvergenceRow> rows;
  for (std::size_t k : k_grid) {
    ConvergenceRow row;
    row.K = k;
    row.record = mean_record(records, std::min(k, records.size()));
    rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    MeasurementRecord d{};
    for (int m = 0; m < kNumMeasurements; ++m) {
      d[m] = std::abs(rows[i].record[m] - rows[i + 1].record[m]);
    }
    rows[i].drift = d;
  }
  return rows;
}

}  // namespace gbq
