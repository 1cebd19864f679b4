// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "spectral/encoder.hpp"

namespace {

spectral::Matrix frames(std::size_t t, std::size_t d_in) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  spectral::Matrix m(t, d_in);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

spectral::ModelDims dims(std::size_t d) {
  spectral::ModelDims out;
  out.d_in = 16;
  out.d = d;
  out.hidden = 2 * d;
  out.heads = 2;
  out.classes = 20;
  return out;
}

// range(0) = model width, range(1) = frames per utterance.
void BM_Forward(benchmark::State& state) {
  const spectral::Model m = spectral::Model::random(dims(state.range(0)), 1);
  const spectral::Matrix x = frames(state.range(1), 16);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::model_forward(m, x));
}
BENCHMARK(BM_Forward)->Args({32, 20})->Args({64, 20})->Args({64, 80});

void BM_ForwardBackward(benchmark::State& state) {
  const spectral::Model m = spectral::Model::random(dims(state.range(0)), 1);
  const spectral::Matrix x = frames(state.range(1), 16);
  const std::vector<double> upstream(m.dims.d, 1.0);
  for (auto _ : state) {
    const spectral::ForwardResult f = spectral::model_forward(m, x);
    benchmark::DoNotOptimize(spectral::model_backward(m, f.cache, upstream));
  }
}
BENCHMARK(BM_ForwardBackward)->Args({32, 20})->Args({64, 20})->Args({64, 80});

}  // namespace
