#pragma once

// MSE training of the graybox model with Adam.

#include "gbq/graybox.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gbq {

double mse(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update; increments s.step first.
void adam_step(ModelParams& w, const ModelParams& g, AdamState& s, const AdamConfig& cfg);

enum class Role { Train, Test };

/// Model-ready view of a dataset split: packed features, cached control
/// unitaries (the waveform never depends on trainable weights) and targets.
struct PreparedSet {
  Role role = Role::Train;
  std::vector<std::size_t> ids;
  std::vector<FeatureSeq> features;
  std::vector<Operator2> u_c;
  Eigen::MatrixXd targets;  // 18 x N
  std::size_t size() const { return ids.size(); }
};

PreparedSet prepare(const Dataset& d, const ModelConfig& cfg, Role role);

/// Mean loss over `rows` of a training set and its gradient (overwritten).
/// Rows are processed in fixed chunks and the chunk gradients are combined
/// by a pairwise tree, so the result does not depend on the thread count.
/// Throws Usage when handed a test set.
double loss_and_grad(const ModelParams& p, const PreparedSet& s,
                     std::span<const std::size_t> rows, ModelParams& grad,
                     std::size_t chunk = 32, Exec exec = Exec::Parallel);

/// 18 x N predictions.
Eigen::MatrixXd predict_set(const ModelState& m, const PreparedSet& s, Exec exec = Exec::Parallel);
double evaluate_mse(const ModelState& m, const PreparedSet& s, Exec exec = Exec::Parallel);

struct TrainConfig {
  int iterations = 3000;
  std::size_t batch_size = 0;  // 0: full batch up to 400 examples, else 256
  AdamConfig adam;
  std::uint64_t seed = 0;
  int eval_every = 10;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_path;
  std::optional<double> early_stop_mse;
  std::size_t chunk = 32;
  Exec exec = Exec::Parallel;
};

std::size_t resolve_batch_size(const TrainConfig& cfg, std::size_t n_train);

struct TrainLogRow {
  int iteration = 0;
  double train_mse = 0.0;
  std::optional<double> test_mse;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::size_t batch_size = 0;
  double final_train_mse = 0.0;
  std::optional<double> final_test_mse;
  double wall_seconds = 0.0;
  bool stopped_early = false;
  /// Dataset ids of every example that reached the backward pass.
  std::vector<std::size_t> gradient_ids;
};

using TrainCallback = std::function<void(const TrainLogRow&)>;

/// Runs from m.adam.step up to cfg.iterations. Resuming a checkpointed state
/// with the same config reproduces the uninterrupted trajectory bit for bit.
TrainLog train(ModelState& m, const PreparedSet& train_set, const PreparedSet* test_set,
               const TrainConfig& cfg, const TrainCallback& on_row = {});

void write_log_csv(const TrainLog& log, const std::filesystem::path& path);
nlohmann::json summary_json(const TrainLog& log, const std::string& dataset);

nlohmann::json to_json(const TrainConfig& c);

}  // namespace gbq
