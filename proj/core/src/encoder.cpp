// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spectral/errors.hpp"

namespace spectral {
namespace {

Matrix column_block(const Matrix& m, std::size_t offset, std::size_t width) {
  Matrix out(m.rows(), width);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = m(r, offset + c);
  return out;
}

void add_column_block(Matrix& m, const Matrix& block, std::size_t offset) {
  for (std::size_t r = 0; r < block.rows(); ++r)
    for (std::size_t c = 0; c < block.cols(); ++c) m(r, offset + c) += block(r, c);
}

void softmax_rows(Matrix& s) {
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
}

Matrix random_matrix(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

std::string layer_prefix(std::size_t i) { return "layer" + std::to_string(i) + "."; }

// Slot parameters and their gradients share the "layerN.wq[.factor]" naming.
void slot_params(LinearSlot& slot, const std::string& name, bool dense_trainable,
                 std::vector<NamedParam>& out) {
  if (Adapter* a = slot.adapter()) {
    for (NamedParam p : a->trainable_params()) out.push_back({name + "." + p.name, p.value});
  } else if (dense_trainable) {
    out.push_back({name, slot.dense()});
  }
}

void slot_grads(const LinearSlot& slot, const std::string& name, bool dense_trainable,
                const Matrix& grad_weight, GradientSet& out) {
  if (const Adapter* a = slot.adapter()) {
    for (NamedGrad& g : adapter_backward(*a, grad_weight))
      out.push_back({name + "." + g.name, std::move(g.grad)});
  } else if (dense_trainable) {
    out.push_back({name, grad_weight});
  }
}

void check_finite(const Matrix& m, std::size_t layer_index, const char* what) {
  if (!all_finite(m)) {
    throw NumericError("non-finite " + std::string(what) + " in layer " +
                       std::to_string(layer_index));
  }
}

}  // namespace

LinearSlot::LinearSlot(Matrix dense) : source_(std::move(dense)) { refresh(); }

LinearSlot::LinearSlot(Adapter adapter) : source_(std::move(adapter)) { refresh(); }

void LinearSlot::refresh() {
  if (const Matrix* d = dense()) {
    effective_ = *d;
  } else {
    effective_ = effective_weight(*adapter());
  }
}

void LinearSlot::merge_in_place() {
  if (const Adapter* a = adapter()) {
    source_ = merge(*a);
    refresh();
  }
}

std::string_view to_string(Projection p) noexcept {
  switch (p) {
    case Projection::kQuery:
      return "q";
    case Projection::kKey:
      return "k";
    case Projection::kValue:
      return "v";
  }
  return "?";
}

Projection parse_projection(std::string_view name) {
  if (name == "q") return Projection::kQuery;
  if (name == "k") return Projection::kKey;
  if (name == "v") return Projection::kValue;
  throw ConfigError("unknown projection '" + std::string(name) + "' (expected q, k or v)");
}

LinearSlot& EncoderLayer::slot(Projection p) {
  switch (p) {
    case Projection::kQuery:
      return wq;
    case Projection::kKey:
      return wk;
    case Projection::kValue:
      return wv;
  }
  return wq;
}

const LinearSlot& EncoderLayer::slot(Projection p) const {
  return const_cast<EncoderLayer*>(this)->slot(p);
}

Model Model::random(const ModelDims& dims, std::uint64_t seed) {
  if (dims.d == 0 || dims.d_in == 0 || dims.hidden == 0 || dims.classes == 0 || dims.heads == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (dims.d % dims.heads != 0) {
    throw ConfigError("model dim " + std::to_string(dims.d) + " not divisible by " +
                      std::to_string(dims.heads) + " heads");
  }
  std::mt19937_64 rng(seed);
  const double inv_d = 1.0 / std::sqrt(static_cast<double>(dims.d));
  Model m;
  m.dims = dims;
  m.input_proj =
      random_matrix(dims.d, dims.d_in, 1.0 / std::sqrt(static_cast<double>(dims.d_in)), rng);
  for (std::size_t i = 0; i < dims.layers; ++i) {
    EncoderLayer layer;
    layer.wq = LinearSlot(random_matrix(dims.d, dims.d, inv_d, rng));
    layer.wk = LinearSlot(random_matrix(dims.d, dims.d, inv_d, rng));
    layer.wv = LinearSlot(random_matrix(dims.d, dims.d, inv_d, rng));
    layer.wo = random_matrix(dims.d, dims.d, inv_d, rng);
    layer.ffn1 = random_matrix(dims.hidden, dims.d, inv_d, rng);
    layer.ffn2 =
        random_matrix(dims.d, dims.hidden, 1.0 / std::sqrt(static_cast<double>(dims.hidden)), rng);
    layer.heads = dims.heads;
    m.layers.push_back(std::move(layer));
  }
  m.classifier = random_matrix(dims.classes, dims.d, inv_d, rng);
  return m;
}

void Model::refresh() {
  for (EncoderLayer& layer : layers) {
    layer.wq.refresh();
    layer.wk.refresh();
    layer.wv.refresh();
  }
}

std::vector<NamedParam> Model::trainable_params() {
  std::vector<NamedParam> out;
  if (dense_trainable) out.push_back({"input_proj", &input_proj});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    EncoderLayer& layer = layers[i];
    const std::string prefix = layer_prefix(i);
    slot_params(layer.wq, prefix + "wq", dense_trainable, out);
    slot_params(layer.wk, prefix + "wk", dense_trainable, out);
    slot_params(layer.wv, prefix + "wv", dense_trainable, out);
    if (dense_trainable) {
      out.push_back({prefix + "wo", &layer.wo});
      out.push_back({prefix + "ffn1", &layer.ffn1});
      out.push_back({prefix + "ffn2", &layer.ffn2});
    }
  }
  if (classifier_trainable) out.push_back({"classifier", &classifier});
  return out;
}

ParamCount Model::param_count() const {
  ParamCount total;
  auto add_dense = [&](const Matrix& m) {
    (dense_trainable ? total.trainable : total.frozen) += m.size();
  };
  add_dense(input_proj);
  for (const EncoderLayer& layer : layers) {
    for (const LinearSlot* slot : {&layer.wq, &layer.wk, &layer.wv}) {
      if (const Adapter* a = slot->adapter()) {
        const ParamCount c = spectral::param_count(*a);
        total.trainable += c.trainable;
        total.frozen += c.frozen;
      } else {
        add_dense(*slot->dense());
      }
    }
    add_dense(layer.wo);
    add_dense(layer.ffn1);
    add_dense(layer.ffn2);
  }
  (classifier_trainable ? total.trainable : total.frozen) += classifier.size();
  return total;
}

Matrix attention_forward(const EncoderLayer& layer, const Matrix& x, std::size_t layer_index,
                         AttentionCache& cache) {
  const std::size_t t = x.rows();
  const std::size_t d = x.cols();
  if (t == 0) throw ShapeError("attention_forward: empty sequence");
  if (layer.heads == 0 || d % layer.heads != 0) {
    throw ConfigError("attention_forward: " + std::to_string(layer.heads) +
                      " heads do not divide model dim " + std::to_string(d));
  }
  const std::size_t head_dim = d / layer.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  cache.x = x;
  cache.q = matmul_nt(x, layer.wq.weight());
  cache.k = matmul_nt(x, layer.wk.weight());
  cache.v = matmul_nt(x, layer.wv.weight());
  cache.context = Matrix(t, d);
  cache.weights.clear();
  for (std::size_t h = 0; h < layer.heads; ++h) {
    const std::size_t off = h * head_dim;
    Matrix scores =
        matmul_nt(column_block(cache.q, off, head_dim), column_block(cache.k, off, head_dim)) *
        inv_sqrt;
    check_finite(scores, layer_index, "attention logits");
    softmax_rows(scores);
    add_column_block(cache.context, matmul(scores, column_block(cache.v, off, head_dim)), off);
    cache.weights.push_back(std::move(scores));
  }
  Matrix out = matmul_nt(cache.context, layer.wo) + x;
  check_finite(out, layer_index, "attention output");
  return out;
}

ForwardResult model_forward(const Model& model, const Matrix& frames) {
  if (frames.rows() == 0) throw ShapeError("model_forward: no frames");
  if (frames.cols() != model.dims.d_in) {
    throw ShapeError("model_forward: frames " + frames.shape_string() + " but d_in=" +
                     std::to_string(model.dims.d_in));
  }
  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.frames = frames;
  cache.projected = matmul_nt(frames, model.input_proj);
  Matrix h = cache.projected;
  cache.layers.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const EncoderLayer& layer = model.layers[i];
    LayerCache& lc = cache.layers[i];
    lc.attended = attention_forward(layer, h, i, lc.attention);
    lc.pre_activation = matmul_nt(lc.attended, layer.ffn1);
    lc.activation = lc.pre_activation;
    for (double& v : lc.activation.data()) v = std::max(v, 0.0);
    h = matmul_nt(lc.activation, layer.ffn2) + lc.attended;
    check_finite(h, i, "feed-forward output");
  }
  cache.output = h;
  res.embedding.assign(h.cols(), 0.0);
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) res.embedding[c] += h(r, c);
  for (double& v : res.embedding) v /= static_cast<double>(h.rows());
  return res;
}

GradientSet model_backward(const Model& model, const ForwardCache& cache,
                           std::span<const double> grad_embedding) {
  if (cache.layers.size() != model.layers.size() || cache.output.cols() != model.dims.d ||
      grad_embedding.size() != model.dims.d || cache.frames.cols() != model.dims.d_in) {
    throw ShapeError("model_backward: cache does not match the model");
  }
  const std::size_t t = cache.output.rows();
  Matrix grad(t, model.dims.d);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < model.dims.d; ++c)
      grad(r, c) = grad_embedding[c] / static_cast<double>(t);

  // Gradients are produced back to front, then reversed per layer so the
  // final ordering matches Model::trainable_params().
  std::vector<GradientSet> per_layer(model.layers.size());
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const EncoderLayer& layer = model.layers[li];
    const LayerCache& lc = cache.layers[li];
    const AttentionCache& ac = lc.attention;
    const std::string prefix = layer_prefix(li);
    if (lc.attended.rows() != t || ac.weights.size() != layer.heads) {
      throw ShapeError("model_backward: stale cache for layer " + std::to_string(li));
    }

    // Feed-forward block: out = relu(H·W1ᵀ)·W2ᵀ + H.
    Matrix grad_act = matmul(grad, layer.ffn2);
    Matrix grad_ffn2 = matmul_tn(grad, lc.activation);
    auto pre = lc.pre_activation.data();
    auto ga = grad_act.data();
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (pre[i] <= 0.0) ga[i] = 0.0;
    Matrix grad_ffn1 = matmul_tn(grad_act, lc.attended);
    Matrix grad_attended = grad + matmul(grad_act, layer.ffn1);

    // Attention block: out = softmax(Q·Kᵀ/√dh)·V·Woᵀ + X.
    const std::size_t d = model.dims.d;
    const std::size_t head_dim = d / layer.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Matrix grad_context = matmul(grad_attended, layer.wo);
    Matrix grad_wo = matmul_tn(grad_attended, ac.context);
    Matrix grad_q(t, d);
    Matrix grad_k(t, d);
    Matrix grad_v(t, d);
    for (std::size_t h = 0; h < layer.heads; ++h) {
      const std::size_t off = h * head_dim;
      const Matrix& a = ac.weights[h];
      const Matrix gc = column_block(grad_context, off, head_dim);
      Matrix grad_a = matmul_nt(gc, column_block(ac.v, off, head_dim));
      add_column_block(grad_v, matmul_tn(a, gc), off);
      Matrix grad_s(t, t);
      for (std::size_t r = 0; r < t; ++r) {
        const double inner = dot(grad_a.row(r), a.row(r));
        for (std::size_t c = 0; c < t; ++c) grad_s(r, c) = a(r, c) * (grad_a(r, c) - inner) * inv_sqrt;
      }
      add_column_block(grad_q, matmul(grad_s, column_block(ac.k, off, head_dim)), off);
      add_column_block(grad_k, matmul_tn(grad_s, column_block(ac.q, off, head_dim)), off);
    }

    GradientSet& out = per_layer[li];
    slot_grads(layer.wq, prefix + "wq", model.dense_trainable, matmul_tn(grad_q, ac.x), out);
    slot_grads(layer.wk, prefix + "wk", model.dense_trainable, matmul_tn(grad_k, ac.x), out);
    slot_grads(layer.wv, prefix + "wv", model.dense_trainable, matmul_tn(grad_v, ac.x), out);
    if (model.dense_trainable) {
      out.push_back({prefix + "wo", std::move(grad_wo)});
      out.push_back({prefix + "ffn1", std::move(grad_ffn1)});
      out.push_back({prefix + "ffn2", std::move(grad_ffn2)});
    }

    grad = grad_attended;
    grad += matmul(grad_q, layer.wq.weight());
    grad += matmul(grad_k, layer.wk.weight());
    grad += matmul(grad_v, layer.wv.weight());
  }

  GradientSet result;
  if (model.dense_trainable) result.push_back({"input_proj", matmul_tn(grad, cache.frames)});
  for (GradientSet& g : per_layer)
    for (NamedGrad& e : g) result.push_back(std::move(e));
  return result;
}

Model merged_copy(const Model& model) {
  Model out = model;
  for (EncoderLayer& layer : out.layers) {
    layer.wq.merge_in_place();
    layer.wk.merge_in_place();
    layer.wv.merge_in_place();
  }
  return out;
}

}  // namespace spectral
