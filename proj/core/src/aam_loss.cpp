// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/aam_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spectral/errors.hpp"

namespace spectral {
namespace {

// Below this sin θ the margin derivative is clamped; θ = 0 is a kink of
// cos(θ + m) as a function of cos θ.
constexpr double kMinSine = 1e-12;

}  // namespace

void AamConfig::validate() const {
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) {
    throw ConfigError("aam margin must lie in [0, pi/2), got " + std::to_string(margin));
  }
  if (!(scale > 0.0)) throw ConfigError("aam scale must be positive, got " + std::to_string(scale));
}

AamResult aam_loss(std::span<const double> embedding, std::size_t label, const Matrix& classifier,
                   const AamConfig& config) {
  const std::size_t classes = classifier.rows();
  const std::size_t d = classifier.cols();
  if (embedding.size() != d) {
    throw ShapeError("aam_loss: embedding of size " + std::to_string(embedding.size()) +
                     " for classifier " + classifier.shape_string());
  }
  if (label >= classes) {
    throw RangeError("aam_loss: label " + std::to_string(label) + " with " +
                     std::to_string(classes) + " classes");
  }
  const double e_norm = norm2(embedding);
  if (!(e_norm > 0.0) || !std::isfinite(e_norm)) throw NumericError("aam_loss: zero-norm embedding");

  std::vector<double> e_hat(d);
  for (std::size_t i = 0; i < d; ++i) e_hat[i] = embedding[i] / e_norm;

  std::vector<double> row_norm(classes);
  std::vector<double> cosine(classes);
  for (std::size_t j = 0; j < classes; ++j) {
    row_norm[j] = norm2(classifier.row(j));
    if (!(row_norm[j] > 0.0)) {
      throw NumericError("aam_loss: zero-norm classifier row " + std::to_string(j));
    }
    cosine[j] = dot(classifier.row(j), e_hat) / row_norm[j];
  }

  const double cos_m = std::cos(config.margin);
  const double sin_m = std::sin(config.margin);
  const double c_y = std::clamp(cosine[label], -1.0, 1.0);
  const double sin_y = std::max(std::sqrt(std::max(0.0, 1.0 - c_y * c_y)), kMinSine);
  // cos(θ + m) = cos θ·cos m - sin θ·sin m
  const double target = c_y * cos_m - std::sqrt(std::max(0.0, 1.0 - c_y * c_y)) * sin_m;
  const double target_slope = cos_m + sin_m * c_y / sin_y;

  std::vector<double> logits(classes);
  for (std::size_t j = 0; j < classes; ++j) logits[j] = config.scale * cosine[j];
  logits[label] = config.scale * target;

  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> prob(classes);
  for (std::size_t j = 0; j < classes; ++j) {
    prob[j] = std::exp(logits[j] - mx);
    total += prob[j];
  }
  for (double& p : prob) p /= total;

  AamResult res;
  res.loss = -(logits[label] - mx - std::log(total));

  // dL/dcos_j
  std::vector<double> grad_cos(classes);
  for (std::size_t j = 0; j < classes; ++j) grad_cos[j] = config.scale * prob[j];
  grad_cos[label] = config.scale * (prob[label] - 1.0) * target_slope;

  // cos_j = ŵ_j·ê; push through both normalizations.
  std::vector<double> grad_e_hat(d, 0.0);
  res.grad_classifier = Matrix(classes, d);
  for (std::size_t j = 0; j < classes; ++j) {
    auto w = classifier.row(j);
    const double inv = 1.0 / row_norm[j];
    const double cj = cosine[j];
    auto gw = res.grad_classifier.row(j);
    for (std::size_t i = 0; i < d; ++i) {
      const double w_hat = w[i] * inv;
      grad_e_hat[i] += grad_cos[j] * w_hat;
      gw[i] = grad_cos[j] * (e_hat[i] - cj * w_hat) * inv;
    }
  }
  const double proj = dot(grad_e_hat, e_hat);
  res.grad_embedding.resize(d);
  for (std::size_t i = 0; i < d; ++i)
    res.grad_embedding[i] = (grad_e_hat[i] - proj * e_hat[i]) / e_norm;
  return res;
}

}  // namespace spectral
