#include "gbq/checkpoint.hpp"
#include "gbq/error.hpp"
#include "gbq/trainer.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>

using namespace gbq;

namespace {

bool same_params(const ModelParams& a, const ModelParams& b) {
  const auto x = a.tensors();
  const auto y = b.tensors();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (*x[i] != *y[i]) return false;
  }
  return true;
}

struct Fixture {
  DatasetSplit split = test::tiny_split(4, 3);
  ModelConfig cfg = model_config_for(split.train.header);
  PreparedSet train = prepare(split.train, cfg, Role::Train);
  PreparedSet test = prepare(split.test, cfg, Role::Test);
};

TrainConfig quick(int iterations) {
  TrainConfig c;
  c.iterations = iterations;
  c.eval_every = 1;
  c.chunk = 2;
  return c;
}

}  // namespace

TEST_CASE("mse arithmetic") {
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  std::vector<double> b = a;
  CHECK(mse(a, b) == 0.0);
  for (auto& v : b) v -= 0.1;
  CHECK(mse(a, b) == doctest::Approx(0.01));
  const std::vector<double> a2{0.4, 0.3, 0.2, 0.1};
  const std::vector<double> b2{0.3, 0.2, 0.1, 0.0};
  CHECK(mse(a2, b2) == doctest::Approx(mse(a, b)));
  CHECK_THROWS_AS(mse(a, std::vector<double>{1.0}), Error);
}

TEST_CASE("adam: first step moves every weight by lr against the gradient sign") {
  ModelConfig cfg;
  cfg.n_max = 2;
  ModelState m = make_model(cfg, 1);
  ModelParams g = m.params.zeros_like();
  for (auto* t : g.tensors()) t->setConstant(0.5);
  const ModelParams before = m.params;
  AdamConfig ac;
  ac.lr = 1e-3;
  adam_step(m.params, g, m.adam, ac);
  CHECK(m.adam.step == 1);
  const auto x = before.tensors();
  const auto y = m.params.tensors();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, ((*x[i] - *y[i]).array() - 1e-3).abs().maxCoeff());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("adam: zero gradient from rest leaves weights alone, moments decay") {
  ModelConfig cfg;
  cfg.n_max = 2;
  ModelState m = make_model(cfg, 2);
  const ModelParams before = m.params;
  adam_step(m.params, m.params.zeros_like(), m.adam, {});
  CHECK(same_params(before, m.params));

  ModelParams g = m.params.zeros_like();
  g.tensors()[0]->setConstant(1.0);
  adam_step(m.params, g, m.adam, {});
  const double m1 = (*m.adam.m.tensors()[0])(0, 0);
  const double v1 = (*m.adam.v.tensors()[0])(0, 0);
  adam_step(m.params, m.params.zeros_like(), m.adam, {});
  CHECK((*m.adam.m.tensors()[0])(0, 0) == doctest::Approx(0.9 * m1));
  CHECK((*m.adam.v.tensors()[0])(0, 0) == doctest::Approx(0.999 * v1));
}

TEST_CASE("test examples never reach the backward pass") {
  Fixture f;
  ModelState m = make_model(f.cfg, 1);
  ModelParams g;
  const std::vector<std::size_t> rows{0};
  CHECK_THROWS_AS(loss_and_grad(m.params, f.test, rows, g), Error);
  CHECK_THROWS_AS(train(m, f.test, nullptr, quick(1)), Error);

  const auto log = train(m, f.train, &f.test, quick(3));
  for (const auto& ex : f.split.test.examples) {
    CHECK(std::find(log.gradient_ids.begin(), log.gradient_ids.end(), ex.id) == log.gradient_ids.end());
  }
  CHECK(log.gradient_ids.size() == f.train.size());
  REQUIRE(log.rows.size() == 3);
  for (const auto& r : log.rows) CHECK(r.test_mse.has_value());
}

TEST_CASE("loss and gradient do not depend on the execution mode") {
  Fixture f;
  const ModelState m = make_model(f.cfg, 4);
  std::vector<std::size_t> rows(f.train.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  ModelParams gs, gp;
  const double ls = loss_and_grad(m.params, f.train, rows, gs, 2, Exec::Serial);
  const double lp = loss_and_grad(m.params, f.train, rows, gp, 2, Exec::Parallel);
  CHECK(ls == lp);
  CHECK(same_params(gs, gp));
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run bit for bit") {
  Fixture f;
  TrainConfig cfg = quick(6);
  cfg.batch_size = 3;  // exercise the seeded minibatch path
  cfg.seed = 11;

  ModelState full = make_model(f.cfg, 5);
  train(full, f.train, nullptr, cfg);

  ModelState half = make_model(f.cfg, 5);
  TrainConfig first = cfg;
  first.iterations = 3;
  train(half, f.train, nullptr, first);
  const auto path = std::filesystem::temp_directory_path() / "gbq_test_resume.json";
  save_checkpoint(half, path);
  ModelState resumed = load_checkpoint(path);
  CHECK(resumed.adam.step == 3);
  train(resumed, f.train, nullptr, cfg);

  CHECK(resumed.adam.step == 6);
  CHECK(same_params(full.params, resumed.params));
  CHECK(same_params(full.adam.m, resumed.adam.m));
}

TEST_CASE("checkpoint round trip preserves architecture, weights and metadata") {
  Fixture f;
  ModelState m = make_model(f.cfg, 9);
  train(m, f.train, nullptr, quick(2));
  const auto path = std::filesystem::temp_directory_path() / "gbq_test_ckpt.json";
  save_checkpoint(m, path, {{"dataset", "tiny"}});
  nlohmann::json meta;
  const ModelState back = load_checkpoint(path, &meta);
  CHECK(meta["dataset"] == "tiny");
  CHECK(back.config.n_max == m.config.n_max);
  CHECK(back.config.M == m.config.M);
  CHECK(back.config.feature_scale.A_ref == m.config.feature_scale.A_ref);
  CHECK(back.init_seed == 9);
  CHECK(same_params(back.params, m.params));
  CHECK(same_params(back.adam.v, m.adam.v));
}

TEST_CASE("training lowers the loss on a tiny noiseless set") {
  const auto split = test::tiny_split(0, 2);
  const auto cfg = model_config_for(split.train.header);
  const auto ps = prepare(split.train, cfg, Role::Train);
  ModelState m = make_model(cfg, 3);
  TrainConfig tc = quick(60);
  tc.adam.lr = 1e-2;
  const double before = evaluate_mse(m, ps);
  const auto log = train(m, ps, nullptr, tc);
  CHECK(log.final_train_mse < 0.5 * before);
  CHECK(log.batch_size == ps.size());
}

TEST_CASE("batch size rule") {
  TrainConfig c;
  CHECK(resolve_batch_size(c, 362) == 362);
  CHECK(resolve_batch_size(c, 2100) == 256);
  c.batch_size = 32;
  CHECK(resolve_batch_size(c, 362) == 32);
}
