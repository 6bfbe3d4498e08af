#include <benchmark/benchmark.h>

#include "nop/baselines/astar.hpp"
#include "nop/baselines/two_step.hpp"
#include "nop/env.hpp"
#include "nop/generator.hpp"
#include "nop/train/trainer.hpp"

using namespace nop;

namespace {

GenConfig desk_gen() { return train::desk_config().gen; }

void BM_EnvStep(benchmark::State& st) {
  const auto inst = generate_instance(desk_gen(), 3);
  Rng rng(1);
  auto s = reset(inst);
  for (auto _ : st) {
    if (s.done) s = reset(inst);
    s = step(s, inst, rng.uniform_int(0, 7));
    benchmark::DoNotOptimize(s.position);
  }
}
BENCHMARK(BM_EnvStep);

void BM_LocalMaps(benchmark::State& st) {
  const auto inst = generate_instance(desk_gen(), 4);
  const auto cfg = train::desk_config().model.maps;
  for (auto _ : st) benchmark::DoNotOptimize(rasterize_local_maps({0.5, 0.5}, inst, 1, cfg));
}
BENCHMARK(BM_LocalMaps);

void BM_AStar(benchmark::State& st) {
  const auto inst = generate_instance(desk_gen(), 5);
  const auto grid = baselines::make_grid(inst);
  for (auto _ : st) {
    benchmark::DoNotOptimize(baselines::astar(grid, inst.nodes().front(), inst.nodes().back()));
  }
}
BENCHMARK(BM_AStar);

void BM_TwoStep(benchmark::State& st) {
  const auto inst = generate_instance(desk_gen(), 6);
  for (auto _ : st) benchmark::DoNotOptimize(baselines::two_step_plan(inst));
}
BENCHMARK(BM_TwoStep);

void BM_Encode(benchmark::State& st) {
  const train::Policy m(train::desk_config().model, 1);
  const auto inst = generate_instance(desk_gen(), 7);
  for (auto _ : st) benchmark::DoNotOptimize(m.encode(inst));
}
BENCHMARK(BM_Encode);

void BM_Act(benchmark::State& st) {
  const train::Policy m(train::desk_config().model, 1);
  const auto inst = generate_instance(desk_gen(), 8);
  const auto g = m.encode(inst);
  const auto s = reset(inst);
  Rng rng(2);
  for (auto _ : st) benchmark::DoNotOptimize(m.act(s, inst, g, model::DecodeMode::Sample, rng));
}
BENCHMARK(BM_Act);

void BM_TrainIteration(benchmark::State& st) {
  auto cfg = train::desk_config();
  cfg.batch = static_cast<int>(st.range(0));
  train::Trainer tr(cfg);
  for (auto _ : st) benchmark::DoNotOptimize(tr.run_iteration());
  st.SetItemsProcessed(st.iterations() * cfg.batch);
}
BENCHMARK(BM_TrainIteration)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
