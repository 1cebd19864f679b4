// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spectral/adapter.hpp"
#include "spectral/matrix.hpp"

namespace spectral {

/// A bias-free projection y = x·Wᵀ whose weight is either a plain dense
/// matrix or the effective weight of an adapter.
class LinearSlot {
 public:
  LinearSlot() = default;
  explicit LinearSlot(Matrix dense);
  explicit LinearSlot(Adapter adapter);

  bool adapted() const noexcept { return std::holds_alternative<Adapter>(source_); }
  /// The weight the forward pass uses. Call refresh() after mutating parameters.
  const Matrix& weight() const noexcept { return effective_; }
  void refresh();

  Matrix* dense() noexcept { return std::get_if<Matrix>(&source_); }
  const Matrix* dense() const noexcept { return std::get_if<Matrix>(&source_); }
  Adapter* adapter() noexcept { return std::get_if<Adapter>(&source_); }
  const Adapter* adapter() const noexcept { return std::get_if<Adapter>(&source_); }

  /// Replaces an adapted source by its merged dense weight.
  void merge_in_place();

 private:
  std::variant<Matrix, Adapter> source_;
  Matrix effective_;
};

enum class Projection { kQuery, kKey, kValue };
std::string_view to_string(Projection p) noexcept;
/// Accepts "q", "k", "v"; ConfigError otherwise.
Projection parse_projection(std::string_view name);

struct EncoderLayer {
  LinearSlot wq;
  LinearSlot wk;
  LinearSlot wv;
  Matrix wo;    // d×d
  Matrix ffn1;  // h×d
  Matrix ffn2;  // d×h
  std::size_t heads = 1;

  LinearSlot& slot(Projection p);
  const LinearSlot& slot(Projection p) const;
};

struct ModelDims {
  std::size_t d_in = 16;
  std::size_t d = 32;
  std::size_t hidden = 64;
  std::size_t layers = 1;
  std::size_t heads = 1;
  std::size_t classes = 2;
};

/// Transformer encoder over frame sequences with temporal mean pooling and a
/// cosine classifier head.
///
/// While `dense_trainable` is set every dense weight receives gradients
/// (pretraining). Once cleared only adapter factors and, when
/// `classifier_trainable`, the classifier rows train.
struct Model {
  ModelDims dims;
  Matrix input_proj;  // d×d_in
  std::vector<EncoderLayer> layers;
  Matrix classifier;  // classes×d
  bool dense_trainable = true;
  bool classifier_trainable = true;

  /// Weights drawn from N(0, 1/fan_in); classifier rows from N(0, 1/d).
  static Model random(const ModelDims& dims, std::uint64_t seed);

  void refresh();
  /// Parameters in the order model_backward() emits gradients, classifier last.
  std::vector<NamedParam> trainable_params();
  ParamCount param_count() const;
};

struct AttentionCache {
  Matrix x;
  Matrix q;
  Matrix k;
  Matrix v;
  std::vector<Matrix> weights;  // per head, T×T, rows sum to one
  Matrix context;               // concatenated head outputs, T×d
};

struct LayerCache {
  AttentionCache attention;
  Matrix attended;  // attention block output incl. residual
  Matrix pre_activation;
  Matrix activation;
};

struct ForwardCache {
  Matrix frames;
  Matrix projected;
  std::vector<LayerCache> layers;
  Matrix output;
};

/// Single- or multi-head scaled dot-product self-attention with output
/// projection and residual: (softmax(Q·Kᵀ/√d_head)·V)·Woᵀ + X.
/// NumericError citing `layer_index` on any non-finite intermediate.
Matrix attention_forward(const EncoderLayer& layer, const Matrix& x, std::size_t layer_index,
                         AttentionCache& cache);

struct ForwardResult {
  std::vector<double> embedding;
  ForwardCache cache;
};

ForwardResult model_forward(const Model& model, const Matrix& frames);

/// Reverse-mode gradients for every trainable parameter except the classifier,
/// named like Model::trainable_params(). ShapeError when `cache` does not
/// belong to this model.
GradientSet model_backward(const Model& model, const ForwardCache& cache,
                           std::span<const double> grad_embedding);

/// Swaps every adapted slot for its merged dense weight.
Model merged_copy(const Model& model);

}  // namespace spectral
