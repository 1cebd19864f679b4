// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "spectral/adapter.hpp"
#include "spectral/svd.hpp"

namespace {

spectral::Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  spectral::Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

void BM_JacobiSvd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const spectral::Matrix w = gaussian(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::svd(w));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_JacobiSvd)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNCubed);

void BM_SpectralEffectiveWeight(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  spectral::AdapterSpec spec;
  spec.kind = spectral::AdapterKind::kSpectral;
  spec.rank = 4;
  spec.principal_count = n / 2;
  const spectral::Adapter a = spectral::init_adapter(gaussian(n, n, 2), spec);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::effective_weight(a));
}
BENCHMARK(BM_SpectralEffectiveWeight)->Arg(32)->Arg(64)->Arg(128);

void BM_SpectralAdapterBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  spectral::AdapterSpec spec;
  spec.kind = spectral::AdapterKind::kSpectral;
  spec.rank = 4;
  spec.principal_count = n / 2;
  const spectral::Adapter a = spectral::init_adapter(gaussian(n, n, 3), spec);
  const spectral::Matrix g = gaussian(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::adapter_backward(a, g));
}
BENCHMARK(BM_SpectralAdapterBackward)->Arg(32)->Arg(64)->Arg(128);

}  // namespace
