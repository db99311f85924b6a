#include <benchmark/benchmark.h>

#include "concept_bridge/linalg.hpp"
#include "concept_bridge/parallel.hpp"
#include "concept_bridge/sae.hpp"
#include "concept_bridge/similarity.hpp"
#include "concept_bridge/stats.hpp"
#include "concept_bridge/synthetic.hpp"

using namespace concept_bridge;

namespace {

// args: samples, source features, target features, tile rows, tile cols, inner block
void BM_BlockedCorrelation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto fa = static_cast<std::size_t>(state.range(1));
  const auto fb = static_cast<std::size_t>(state.range(2));
  const TileConfig cfg{static_cast<std::size_t>(state.range(3)), static_cast<std::size_t>(state.range(4)),
                       static_cast<std::size_t>(state.range(5))};
  const auto a = standardize_columns(random_normal_matrix(n, fa, 1)).matrix;
  const auto b = standardize_columns(random_normal_matrix(n, fb, 2)).matrix;
  for (auto _ : state) benchmark::DoNotOptimize(blocked_correlation(a, b, cfg));
  state.counters["GFLOP/s"] = benchmark::Counter(static_cast<double>(estimate_flops(fa, fb, n)) / 1e9,
                                                 benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_BlockedCorrelation)
    ->ArgNames({"N", "Fa", "Fb", "tr", "tc", "kb"})
    ->Args({2000, 512, 768, 128, 256, 256})
    ->Args({2000, 512, 768, 64, 64, 128})
    ->Args({2000, 512, 768, 32, 512, 2000})
    ->Args({2000, 512, 768, 8, 8, 64})
    ->Unit(benchmark::kMillisecond);

void BM_MppcPair(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = static_cast<std::size_t>(state.range(1));
  FeatureMatrix a, b;
  a.data = random_normal_matrix(n, f, 3);
  b.data = random_normal_matrix(n, f, 4);
  a.s_vector.assign(f, 1.0f);
  b.s_vector.assign(f, 1.0f);
  MppcOptions opts;
  opts.target_block = static_cast<std::size_t>(state.range(2));
  for (auto _ : state) benchmark::DoNotOptimize(mppc_pair(a, b, opts));
}
BENCHMARK(BM_MppcPair)
    ->ArgNames({"N", "F", "block"})
    ->Args({2000, 1024, 4096})
    ->Args({2000, 1024, 256})
    ->Unit(benchmark::kMillisecond);

// One forward + backward + Adam step at batch size range(0), D=64, F=512, k=32.
void BM_SaeStep(benchmark::State& state) {
  DictionaryTask task;
  task.d_in = 64;
  const auto acts = make_dictionary_activations(task, static_cast<std::size_t>(state.range(0)), 1);
  TrainConfig cfg;
  auto p = sae_init(64, cfg, acts.data);
  auto adam = AdamState::zeros_like(p);
  for (auto _ : state) {
    const auto fwd = sae_forward(p, acts.data, cfg.tiles);
    const auto g = sae_backward(p, acts.data, fwd);
    adam_step(adam, p, g, cfg);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SaeStep)->Arg(32)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_FisherTail(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fisher_max_tail_log10({0.3, 8192, 10000}));
}
BENCHMARK(BM_FisherTail);

void BM_EstimateFlops(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(estimate_flops(24 * 8192, 24 * 8192, 118287));
}
BENCHMARK(BM_EstimateFlops);

}  // namespace

BENCHMARK_MAIN();
