// Serial reference against the OpenMP kernels. Thread count follows
// OMP_NUM_THREADS; the serial variants never enter a parallel region.
#include "gbq/dataset.hpp"
#include "gbq/graybox.hpp"
#include "gbq/simulator.hpp"
#include "gbq/trainer.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace gbq;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void BM_simulate(benchmark::State& st) {
  SimulationConfig sim;
  sim.K = 200;
  sim.noise_z = sample_psd(Axis::Z, psd_z, sim.T, sim.M);
  sim.noise_x = sample_psd(Axis::X, psd_x, sim.T, sim.M);
  const Waveform w = discretize({cpmg_gaussian(8, sim.T, sim.M)}, sim.T, sim.M);
  for (auto _ : st) benchmark::DoNotOptimize(simulate(sim, w, 3, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(sim.K));
}
BENCHMARK(BM_simulate)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

struct TrainFixture {
  ModelState model;
  PreparedSet set;
  std::vector<std::size_t> rows;
};

const TrainFixture& train_fixture() {
  static const TrainFixture fx = [] {
    DatasetRecipe r = make_recipe(DatasetId::CPMG_G_X_28, Scale::Desk);
    r.n_train = 128;
    r.n_test = 1;
    SimulationConfig sim;
    sim.K = 1;
    const DatasetSplit split = generate_dataset(r, sim, Scale::Desk, 5);
    TrainFixture f{make_model(model_config_for(split.train.header), 1), {}, {}};
    f.set = prepare(split.train, f.model.config, Role::Train);
    f.rows.resize(f.set.size());
    std::iota(f.rows.begin(), f.rows.end(), std::size_t{0});
    return f;
  }();
  return fx;
}

void BM_loss_and_grad(benchmark::State& st) {
  const TrainFixture& fx = train_fixture();
  ModelParams grad = fx.model.params;
  for (auto _ : st) {
    benchmark::DoNotOptimize(loss_and_grad(fx.model.params, fx.set, fx.rows, grad, 32, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(fx.rows.size()));
}
BENCHMARK(BM_loss_and_grad)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
