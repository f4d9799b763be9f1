// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "revopt/metrics.hpp"

namespace {

std::vector<double> scores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> half_steps(0, 8);
  std::vector<double> v(n);
  for (auto& x : v) x = 1.0 + 0.5 * half_steps(rng);
  return v;
}

void BM_Kendall(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = scores(n, 1), y = scores(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(revopt::kendall_tau(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Kendall)->RangeMultiplier(8)->Range(64, 1 << 15)->Complexity(benchmark::oNLogN);

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = scores(n, 3), y = scores(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(revopt::spearman(x, y));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(8)->Range(64, 1 << 15);

void BM_Krippendorff(benchmark::State& state) {
  const auto items = static_cast<std::size_t>(state.range(0));
  revopt::AgreementMatrix m;
  for (int r = 0; r < 4; ++r) m.raters.push_back("h" + std::to_string(r));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> raw(1, 5);
  for (std::size_t i = 0; i < items; ++i) {
    m.items.push_back("i" + std::to_string(i));
    m.cells.emplace_back();
    for (int r = 0; r < 4; ++r) m.cells.back().push_back(static_cast<double>(raw(rng)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(revopt::krippendorff_alpha(m));
}
BENCHMARK(BM_Krippendorff)->Arg(21)->Arg(500)->Arg(5000);

}  // namespace
