// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/optimizer.hpp"

#include <cmath>

#include "spectral/errors.hpp"

namespace spectral {

void optimizer_step(std::span<const NamedParam> params, const GradientSet& grads,
                    AdamState& state, double lr, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer_step: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != grads[i].name) {
      throw ShapeError("optimizer_step: parameter '" + params[i].name + "' paired with gradient '" +
                       grads[i].name + "'");
    }
    require_same_shape(*params[i].value, grads[i].grad, "optimizer_step(" + params[i].name + ")");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& value = *params[i].value;
    auto [it, inserted] = state.moments.try_emplace(params[i].name);
    AdamState::Moments& mom = it->second;
    if (inserted) {
      mom.first = Matrix(value.rows(), value.cols());
      mom.second = Matrix(value.rows(), value.cols());
    }
    require_same_shape(mom.first, value, "optimizer_step state(" + params[i].name + ")");
    auto p = value.data();
    auto g = grads[i].grad.data();
    auto m = mom.first.data();
    auto v = mom.second.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void accumulate(GradientSet& into, const GradientSet& add) {
  if (into.empty()) {
    into = add;
    return;
  }
  if (into.size() != add.size()) throw ShapeError("accumulate: gradient sets differ in length");
  for (std::size_t i = 0; i < into.size(); ++i) {
    if (into[i].name != add[i].name) {
      throw ShapeError("accumulate: '" + into[i].name + "' vs '" + add[i].name + "'");
    }
    into[i].grad += add[i].grad;
  }
}

void scale(GradientSet& grads, double factor) {
  for (NamedGrad& g : grads) g.grad *= factor;
}

}  // namespace spectral
