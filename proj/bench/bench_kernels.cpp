// Serial reference kernels against their OpenMP twins on trace-sized inputs.
// Range argument is the sample count; 3,000,000 is ten minutes at 5 kHz.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "pb/trace/kernels.hpp"

namespace {

using namespace pb::trace;

std::vector<double> currents(std::size_t n) {
  std::vector<double> v(n);
  kernels::synthesize_current(v, 150.0, 5.0, 42, 0);
  return v;
}

std::vector<std::size_t> bounds_for(std::size_t n, std::size_t width) {
  std::vector<std::size_t> b;
  for (std::size_t i = 0; i < n; i += width) b.push_back(i);
  b.push_back(n);
  return b;
}

template <double (*Sum)(std::span<const double>)>
void BM_sum(benchmark::State& state) {
  const auto v = currents(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Sum(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Synth)(std::span<double>, double, double, std::uint64_t, std::uint64_t)>
void BM_synthesize(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Synth(out, 150.0, 5.0, 42, 0);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <std::vector<double> (*Means)(std::span<const double>, std::span<const std::size_t>)>
void BM_range_means(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto v = currents(n);
  const auto b = bounds_for(n, 5000);  // 1 s buckets
  for (auto _ : state) benchmark::DoNotOptimize(Means(v, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <std::optional<std::size_t> (*Above)(std::span<const double>, double)>
void BM_first_above(benchmark::State& state) {
  const auto v = currents(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Above(v, 1e9));  // never hit: full scan
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_sum<reference::compensated_sum>)->Name("sum/serial")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_sum<kernels::compensated_sum>)->Name("sum/omp")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_synthesize<reference::synthesize_current>)->Name("synthesize/serial")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_synthesize<kernels::synthesize_current>)->Name("synthesize/omp")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_range_means<reference::range_means>)->Name("range_means/serial")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_range_means<kernels::range_means>)->Name("range_means/omp")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_first_above<reference::first_above>)->Name("first_above/serial")->Range(1 << 14, 3'000'000);
BENCHMARK(BM_first_above<kernels::first_above>)->Name("first_above/omp")->Range(1 << 14, 3'000'000);

BENCHMARK_MAIN();
