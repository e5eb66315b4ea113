#include "gbq/trainer.hpp"

#include "gbq/checkpoint.hpp"
#include "gbq/error.hpp"
#include "gbq/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace gbq {

namespace {

void add_into(ModelParams& acc, const ModelParams& x) {
  auto a = acc.tensors();
  auto b = x.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) *a[i] += *b[i];
}

// Sums grads[lo, hi) into grads[lo] by a fixed binary tree.
void pairwise_reduce(std::vector<ModelParams>& grads, std::vector<double>& loss, std::size_t lo,
                     std::size_t hi) {
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  pairwise_reduce(grads, loss, lo, mid);
  pairwise_reduce(grads, loss, mid, hi);
  add_into(grads[lo], grads[mid]);
  loss[lo] += loss[mid];
}

std::vector<RealVar> feature_leaves(Tape& t, const PreparedSet& s,
                                    std::span<const std::size_t> rows, int n_max, int width) {
  std::vector<const FeatureSeq*> batch;
  for (std::size_t r : rows) batch.push_back(&s.features[r]);
  std::vector<RealVar> xs;
  for (auto& x : pack_features(batch, n_max, width)) xs.push_back(t.leaf(std::move(x)));
  return xs;
}

int feature_width(const PreparedSet& s) {
  return s.features.empty() || s.features[0].empty() ? 0
                                                     : static_cast<int>(s.features[0][0].size());
}

std::vector<std::span<const std::size_t>> chunks_of(std::span<const std::size_t> rows,
                                                    std::size_t chunk) {
  std::vector<std::span<const std::size_t>> out;
  for (std::size_t i = 0; i < rows.size(); i += chunk) {
    out.push_back(rows.subspan(i, std::min(chunk, rows.size() - i)));
  }
  return out;
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "mse: prediction and target lengths differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

void adam_step(ModelParams& w, const ModelParams& g, AdamState& s, const AdamConfig& cfg) {
  s.step += 1;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  auto ws = w.tensors();
  auto gs = g.tensors();
  auto ms = s.m.tensors();
  auto vs = s.v.tensors();
  for (std::size_t i = 0; i < ws.size(); ++i) {
    auto m = ms[i]->array();
    auto v = vs[i]->array();
    const auto gr = gs[i]->array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * gr;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * gr.square();
    ws[i]->array() -= cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
  }
}

PreparedSet prepare(const Dataset& d, const ModelConfig& cfg, Role role) {
  PreparedSet s;
  s.role = role;
  const std::size_t n = d.examples.size();
  s.ids.resize(n);
  s.features.resize(n);
  s.u_c.resize(n);
  s.targets.resize(kNumMeasurements, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = d.examples[i];
    const bool width_ok = std::all_of(ex.features.begin(), ex.features.end(), [&](const auto& v) {
      return v.size() == static_cast<std::size_t>(cfg.input_width);
    });
    if (ex.features.size() != static_cast<std::size_t>(cfg.n_max) || !width_ok) {
      throw Error(ErrorKind::DatasetSchemaError,
                  "example " + std::to_string(ex.id) + " does not match the model input layout");
    }
    if (ex.waveform.M != cfg.M) {
      throw Error(ErrorKind::DatasetSchemaError, "waveform grid differs from the model grid");
    }
    s.ids[i] = ex.id;
    s.features[i] = ex.features;
    s.u_c[i] = control_unitary(ex.waveform, cfg.omega);
    for (int k = 0; k < kNumMeasurements; ++k) {
      s.targets(k, static_cast<Eigen::Index>(i)) = ex.measurements[k];
    }
  }
  return s;
}

double loss_and_grad(const ModelParams& p, const PreparedSet& s,
                     std::span<const std::size_t> rows, ModelParams& grad, std::size_t chunk,
                     Exec exec) {
  if (s.role != Role::Train) {
    throw Error(ErrorKind::Usage, "test examples must never reach the backward pass");
  }
  if (rows.empty()) throw Error(ErrorKind::ShapeMismatch, "empty batch");
  const int n_max = static_cast<int>(s.features[rows[0]].size());
  const int width = feature_width(s);
  const auto parts = chunks_of(rows, std::max<std::size_t>(chunk, 1));
  std::vector<ModelParams> grads(parts.size());
  std::vector<double> loss(parts.size(), 0.0);
  const double total = static_cast<double>(rows.size());

  auto run = [&](std::size_t c) {
    const auto part = parts[c];
    grads[c] = p.zeros_like();
    Tape t;
    const auto xs = feature_leaves(t, s, part, n_max, width);
    std::vector<Operator2> us;
    Eigen::MatrixXd target(kNumMeasurements, static_cast<Eigen::Index>(part.size()));
    for (std::size_t b = 0; b < part.size(); ++b) {
      us.push_back(s.u_c[part[b]]);
      target.col(static_cast<Eigen::Index>(b)) = s.targets.col(static_cast<Eigen::Index>(part[b]));
    }
    const RealVar pred = model_forward(t, xs, t.leaf(std::move(us)), p, &grads[c]);
    // Chunk mean rescaled so chunk losses add up to the batch mean.
    const RealVar l = affine(t, mse(t, pred, target), static_cast<double>(part.size()) / total, 0.0);
    loss[c] = t.value(l)(0, 0);
    t.backward(l);
  };

  if (exec == Exec::Serial) {
    for (std::size_t c = 0; c < parts.size(); ++c) run(c);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t c = 0; c < parts.size(); ++c) run(c);
  }
  pairwise_reduce(grads, loss, 0, grads.size());
  grad = std::move(grads[0]);
  return loss[0];
}

Eigen::MatrixXd predict_set(const ModelState& m, const PreparedSet& s, Exec exec) {
  const std::size_t n = s.size();
  Eigen::MatrixXd out(kNumMeasurements, static_cast<Eigen::Index>(n));
  if (n == 0) return out;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto parts = chunks_of(all, 64);
  const int width = feature_width(s);
  auto run = [&](std::size_t c) {
    const auto part = parts[c];
    Tape t;
    const auto xs = feature_leaves(t, s, part, m.config.n_max, width);
    std::vector<Operator2> us;
    for (std::size_t r : part) us.push_back(s.u_c[r]);
    const RealVar pred = model_forward(t, xs, t.leaf(std::move(us)), m.params, nullptr);
    out.middleCols(static_cast<Eigen::Index>(part[0]), static_cast<Eigen::Index>(part.size())) =
        t.value(pred);
  };
  if (exec == Exec::Serial) {
    for (std::size_t c = 0; c < parts.size(); ++c) run(c);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t c = 0; c < parts.size(); ++c) run(c);
  }
  return out;
}

double evaluate_mse(const ModelState& m, const PreparedSet& s, Exec exec) {
  const Eigen::MatrixXd pred = predict_set(m, s, exec);
  return (pred - s.targets).squaredNorm() / static_cast<double>(pred.size());
}

std::size_t resolve_batch_size(const TrainConfig& cfg, std::size_t n_train) {
  if (cfg.batch_size > 0) return std::min(cfg.batch_size, n_train);
  return n_train <= 400 ? n_train : std::min<std::size_t>(256, n_train);
}

TrainLog train(ModelState& m, const PreparedSet& train_set, const PreparedSet* test_set,
               const TrainConfig& cfg, const TrainCallback& on_row) {
  if (cfg.iterations < 1) throw Error(ErrorKind::Usage, "iterations must be at least 1");
  if (!(cfg.adam.lr > 0.0)) throw Error(ErrorKind::Usage, "learning rate must be positive");
  if (train_set.role != Role::Train) throw Error(ErrorKind::Usage, "training on a test set");
  if (train_set.size() == 0) throw Error(ErrorKind::DatasetSchemaError, "empty training set");

  TrainLog log;
  const std::size_t n = train_set.size();
  log.batch_size = resolve_batch_size(cfg, n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<bool> touched(n, false);
  ModelParams grad;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<std::size_t> batch;
  while (m.adam.step < cfg.iterations) {
    const std::int64_t it = m.adam.step;
    if (log.batch_size == n) {
      batch = all;
    } else {
      // Partial Fisher-Yates keyed by (seed, iteration) only.
      std::vector<std::size_t> pool = all;
      CounterRng rng(derive_key({cfg.seed, static_cast<std::uint64_t>(Stream::Batch),
                                 static_cast<std::uint64_t>(it)}));
      for (std::size_t i = 0; i < log.batch_size; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
      }
      batch.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(log.batch_size));
      std::sort(batch.begin(), batch.end());
    }
    for (std::size_t r : batch) touched[r] = true;
    const double loss = loss_and_grad(m.params, train_set, batch, grad, cfg.chunk, cfg.exec);
    if (!std::isfinite(loss) || !grad.all_finite()) {
      throw Error(ErrorKind::NonFiniteLoss,
                  "non-finite loss or gradient at iteration " + std::to_string(it));
    }
    adam_step(m.params, grad, m.adam, cfg.adam);

    TrainLogRow row;
    row.iteration = static_cast<int>(it);
    row.train_mse = loss;
    const bool last = m.adam.step >= cfg.iterations;
    if (test_set && test_set->size() > 0 && (last || cfg.eval_every <= 1 || it % cfg.eval_every == 0)) {
      row.test_mse = evaluate_mse(m, *test_set, cfg.exec);
    }
    row.wall_seconds = elapsed();
    log.rows.push_back(row);
    if (on_row) on_row(row);

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
        m.adam.step % cfg.checkpoint_every == 0) {
      save_checkpoint(m, cfg.checkpoint_path, {{"iteration", m.adam.step}, {"train", to_json(cfg)}});
    }
    if (cfg.early_stop_mse && loss < *cfg.early_stop_mse) {
      log.stopped_early = true;
      break;
    }
  }
  log.final_train_mse = evaluate_mse(m, train_set, cfg.exec);
  if (test_set && test_set->size() > 0) log.final_test_mse = evaluate_mse(m, *test_set, cfg.exec);
  for (std::size_t i = 0; i < n; ++i) {
    if (touched[i]) log.gradient_ids.push_back(train_set.ids[i]);
  }
  log.wall_seconds = elapsed();
  return log;
}

void write_log_csv(const TrainLog& log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "iteration,train_mse,test_mse,wall_seconds\n" << std::setprecision(17);
  for (const auto& r : log.rows) {
    out << r.iteration << ',' << r.train_mse << ',';
    if (r.test_mse) out << *r.test_mse;
    out << ',' << r.wall_seconds << '\n';
  }
}

nlohmann::json summary_json(const TrainLog& log, const std::string& dataset) {
  nlohmann::json j = {{"dataset", dataset},
                      {"train_mse", log.final_train_mse},
                      {"iterations", log.rows.empty() ? 0 : log.rows.back().iteration + 1},
                      {"batch_size", log.batch_size},
                      {"stopped_early", log.stopped_early},
                      {"wall_seconds", log.wall_seconds}};
  j["test_mse"] = log.final_test_mse ? nlohmann::json(*log.final_test_mse) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"iterations", c.iterations},
                      {"batch_size", c.batch_size},
                      {"lr", c.adam.lr},
                      {"beta1", c.adam.beta1},
                      {"beta2", c.adam.beta2},
                      {"eps", c.adam.eps},
                      {"seed", c.seed},
                      {"eval_every", c.eval_every},
                      {"chunk", c.chunk}};
  j["early_stop_mse"] = c.early_stop_mse ? nlohmann::json(*c.early_stop_mse) : nlohmann::json(nullptr);
  return j;
}

}  // namespace gbq
