#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "mtsp/giant_tour.hpp"
#include "mtsp/kmeans.hpp"
#include "mtsp/manager.hpp"
#include "mtsp/oracle.hpp"
#include "mtsp/worker.hpp"

using namespace mtsp;

namespace {

worker::WorkerArch bench_arch() {
  worker::WorkerArch a;
  a.layers = 2;
  a.heads = 4;
  a.embed = 64;
  a.ff = 128;
  return a;
}

void BM_Backtrack(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Instance inst = generate_instance(n, 1, 100.0, 7);
  const DistanceMatrix dist(inst);
  std::vector<int> tour(static_cast<std::size_t>(n));
  std::iota(tour.begin(), tour.end(), 0);
  std::shuffle(tour.begin(), tour.end(), std::mt19937_64(3));
  for (auto _ : state) benchmark::DoNotOptimize(backtrack(tour, inst, dist));
}
BENCHMARK(BM_Backtrack)->Arg(5)->Arg(20)->Arg(100);

void BM_GiantCost(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Instance inst = generate_instance(n, 4, 100.0, 9);
  const DistanceMatrix dist(inst);
  std::mt19937_64 rng(1);
  const auto gt = baselines::random_giant_tour(inst.n(), inst.m, rng);
  for (auto _ : state) benchmark::DoNotOptimize(baselines::giant_cost(gt, inst, dist, Objective::MinMax));
}
BENCHMARK(BM_GiantCost)->Arg(20)->Arg(100);

void BM_Oracle(benchmark::State& state) {
  const Instance inst = generate_instance(6, 2, 100.0, 11);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::solve_exact(inst));
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

void BM_WorkerGreedy(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const worker::WorkerModel model(bench_arch(), 1);
  std::vector<Instance> subs;
  for (int i = 0; i < batch; ++i) subs.push_back(generate_instance(5, 1, 100.0, static_cast<std::uint64_t>(i)));
  for (auto _ : state) benchmark::DoNotOptimize(worker::rollout_many(model, subs, worker::DecodeMode::Greedy));
}
BENCHMARK(BM_WorkerGreedy)->Arg(1)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_ManagerSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  manager::ManagerArch arch;
  arch.m = m;
  const manager::ManagerModel model(arch, 2);
  const worker::WorkerModel wk(bench_arch(), 3);
  const Instance inst = generate_instance(n, m, 100.0, 13);
  for (auto _ : state) benchmark::DoNotOptimize(manager::solve(inst, model, wk));
}
BENCHMARK(BM_ManagerSolve)->Args({20, 4})->Args({50, 10})->Unit(benchmark::kMillisecond);

void BM_KMeansAssign(benchmark::State& state) {
  const Instance inst = generate_instance(50, 10, 100.0, 17);
  for (auto _ : state) benchmark::DoNotOptimize(baselines::kmeans_assign(inst));
}
BENCHMARK(BM_KMeansAssign)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
