#include <benchmark/benchmark.h>

#include <map>

#include "sbm/bp.hpp"
#include "sbm/embedding.hpp"
#include "sbm/lanczos.hpp"
#include "sbm/mf.hpp"
#include "sbm/netcore.hpp"
#include "sbm/operators.hpp"

namespace {

using namespace sbm;

const Instance& four_groups(std::size_t n) {
  static std::map<std::size_t, Instance> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, generate(modular_model(4, 16.0, 0.3, static_cast<double>(n)), n, 1)).first;
  }
  return it->second;
}

void BM_Generate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = modular_model(4, 16.0, 0.3, static_cast<double>(n));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate(model, n, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Generate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_BpSweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& inst = four_groups(n);
  const auto model = modular_model(4, 16.0, 0.3, static_cast<double>(n));
  auto bp = make_bp_state(inst.graph, model, init_messages(inst.graph, model, InitMode::kRandom, 2));
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(bp_sweep(bp, inst.graph, model, 0.0, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inst.graph.n_slots()));
}
BENCHMARK(BM_BpSweep)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_MfSweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& inst = four_groups(n);
  const auto model = modular_model(4, 16.0, 0.3, static_cast<double>(n));
  auto mf = init_mf_state(inst.graph, model, InitMode::kRandom, 2);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(mf_sweep(mf, inst.graph, model, 0.0, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MfSweep)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ModularityLanczos(benchmark::State& state) {
  const auto& inst = four_groups(static_cast<std::size_t>(state.range(0)));
  const ModularityOperator op(inst.graph);
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_eigenpairs(op, 3, EigenOrder::kLargestMagnitude));
  }
}
BENCHMARK(BM_ModularityLanczos)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_DiffusionEmbedding(benchmark::State& state) {
  const auto& inst = four_groups(static_cast<std::size_t>(state.range(0)));
  const auto lcc = largest_connected_component(inst.graph);
  for (auto _ : state) benchmark::DoNotOptimize(embed_diffusion(lcc.graph, 3, 3, 1e-3));
}
BENCHMARK(BM_DiffusionEmbedding)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
