// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>

#include "connecto/connectome.hpp"
#include "connecto/kernels.hpp"

using namespace connecto;

namespace {

Matrix sample(Index n) { return generate_synthetic({.n_subjects = n, .seed = 3}).t0().rows(); }

void BM_ColumnMomentsSerial(benchmark::State& state) {
  const Matrix x = sample(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::column_moments(x));
}

void BM_ColumnMomentsParallel(benchmark::State& state) {
  const Matrix x = sample(state.range(0));
  kernels::set_thread_count(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::column_moments(x));
}

void BM_DistancesSerial(benchmark::State& state) {
  const Matrix x = sample(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::pairwise_sq_distances(x, x));
}

void BM_DistancesParallel(benchmark::State& state) {
  const Matrix x = sample(state.range(0));
  kernels::set_thread_count(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pairwise_sq_distances(x, x));
}

void work(Index i, std::vector<double>& out) {
  double acc = 0;
  for (int k = 1; k < 2000; ++k) acc += std::sin(static_cast<double>(i * k));
  out[static_cast<std::size_t>(i)] = acc;
}

void BM_ForEachSerial(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    kernels::serial::for_each(state.range(0), [&](Index i) { work(i, out); });
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ForEachParallel(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  kernels::set_thread_count(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    kernels::parallel_for(state.range(0), [&](Index i) { work(i, out); });
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_ColumnMomentsSerial)->Arg(150)->Arg(600);
BENCHMARK(BM_ColumnMomentsParallel)->ArgsProduct({{150, 600}, {1, 2, 4}})->UseRealTime();
BENCHMARK(BM_DistancesSerial)->Arg(150)->Arg(300);
BENCHMARK(BM_DistancesParallel)->ArgsProduct({{150, 300}, {1, 2, 4}})->UseRealTime();
BENCHMARK(BM_ForEachSerial)->Arg(595);
BENCHMARK(BM_ForEachParallel)->ArgsProduct({{595}, {1, 2, 4}})->UseRealTime();

BENCHMARK_MAIN();
