// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>

#include "spectral/adapter.hpp"

namespace spectral {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  struct Moments {
    Matrix first;
    Matrix second;
  };
  std::map<std::string, Moments> moments;
  long step = 0;
};

/// One bias-corrected Adam update. params[i] and grads[i] must share name and
/// shape; ShapeError otherwise.
void optimizer_step(std::span<const NamedParam> params, const GradientSet& grads,
                    AdamState& state, double lr, const AdamConfig& config = {});

/// Elementwise into += add; names and shapes must line up.
void accumulate(GradientSet& into, const GradientSet& add);
void scale(GradientSet& grads, double factor);

}  // namespace spectral
