// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "spectral/metrics.hpp"

namespace {

spectral::TrialSet trials(std::size_t n) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution target(0.1);
  std::vector<spectral::Trial> out(n);
  for (spectral::Trial& t : out) {
    t.is_target = target(rng);
    t.score = normal(rng) + (t.is_target ? 2.0 : 0.0);
  }
  out[0].is_target = true;
  out[1].is_target = false;
  return spectral::TrialSet(std::move(out));
}

void BM_Eer(benchmark::State& state) {
  const spectral::TrialSet set = trials(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::compute_eer(set));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Eer)->RangeMultiplier(10)->Range(100, 100000)->Complexity(benchmark::oNLogN);

void BM_MinDcf(benchmark::State& state) {
  const spectral::TrialSet set = trials(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::compute_min_dcf(set));
}
BENCHMARK(BM_MinDcf)->RangeMultiplier(10)->Range(100, 100000);

}  // namespace
