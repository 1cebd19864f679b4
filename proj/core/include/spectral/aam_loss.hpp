// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "spectral/matrix.hpp"

namespace spectral {

/// Additive angular margin softmax settings; margin in radians.
struct AamConfig {
  double margin = 0.2;
  double scale = 30.0;

  /// ConfigError unless 0 <= margin < pi/2 and scale > 0.
  void validate() const;
};

struct AamResult {
  double loss = 0.0;
  std::vector<double> grad_embedding;
  Matrix grad_classifier;
};

/// Cross-entropy over logits scale·cos θ_j, with the target logit replaced by
/// scale·cos(θ_y + margin). θ_j is the angle between the embedding and
/// classifier row j. NumericError for a zero-norm embedding or row.
AamResult aam_loss(std::span<const double> embedding, std::size_t label, const Matrix& classifier,
                   const AamConfig& config);

}  // namespace spectral
