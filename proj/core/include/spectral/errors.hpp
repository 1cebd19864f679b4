// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace spectral {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (matmul, gradients, stale caches, checkpoints).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An index or count outside its admissible range.
class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Non-finite values, zero norms, divergence or non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectral
