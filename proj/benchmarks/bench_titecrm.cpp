#include <benchmark/benchmark.h>

#include <vector>

#include "titecrm/crm.hpp"
#include "titecrm/scenario.hpp"
#include "titecrm/simulation.hpp"

using namespace titecrm;

namespace {

std::vector<Observation> sample_observations(int n) {
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) {
    const DoseLevel dose = 1 + i % 5;
    const bool tox = i % 7 == 3;
    const double w = tox ? 1.0 : (i % 3 == 0 ? 1.0 : 0.125 * (1 + i % 8));
    obs.push_back({dose, tox, w});
  }
  return obs;
}

void BM_PosteriorMean(benchmark::State& state) {
  const PosteriorModel model(build_skeleton(0.25, 0.10, 3, 5), std::sqrt(1.34));
  const auto obs = sample_observations(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(model.beta_mean(obs));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PosteriorMean)->Arg(6)->Arg(24)->Arg(36);

void BM_RunReplicate(benchmark::State& state) {
  DesignConfig design;
  const auto library = scenario_library();
  const ScenarioSpec& scenario = library[2 * 11 + 3];  // tox3, constant 60% progression
  const auto strategy = static_cast<Strategy>(state.range(0));
  SimulationOptions options{true};
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replicate(design, scenario, strategy, 1, r++, options));
}
BENCHMARK(BM_RunReplicate)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_PatientStream(benchmark::State& state) {
  const auto library = scenario_library();
  std::uint64_t p = 0;
  for (auto _ : state) {
    PatientStream rng(1, 0, p++);
    benchmark::DoNotOptimize(draw_outcome(library[3], 3, 8.0, rng));
  }
}
BENCHMARK(BM_PatientStream);

}  // namespace

BENCHMARK_MAIN();
