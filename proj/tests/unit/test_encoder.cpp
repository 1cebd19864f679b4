// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "checks.hpp"
#include "oracles.hpp"
#include "spectral/aam_loss.hpp"
#include "spectral/encoder.hpp"
#include "spectral/errors.hpp"
#include "spectral/experiment.hpp"

namespace spectral {
namespace {

ModelDims small_dims(std::size_t heads = 1, std::size_t layers = 1) {
  ModelDims d;
  d.d_in = 5;
  d.d = 8;
  d.hidden = 12;
  d.layers = layers;
  d.heads = heads;
  d.classes = 5;
  return d;
}

TEST(Attention, SingleFrameIsValueThenOutputPlusResidual) {
  Model m = Model::random(small_dims(), 1);
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(1, 8, rng);
  AttentionCache cache;
  const Matrix out = attention_forward(m.layers[0], x, 0, cache);
  const EncoderLayer& l = m.layers[0];
  Matrix expected = oracle::naive_matmul(
      oracle::naive_matmul(x, oracle::naive_transpose(l.wv.weight())), oracle::naive_transpose(l.wo));
  expected += x;
  EXPECT_LT(max_abs_diff(out, expected), 1e-13);
  EXPECT_EQ(cache.weights[0](0, 0), 1.0);
}

TEST(Attention, ZeroQueryKeyGivesUniformWeights) {
  Model m = Model::random(small_dims(), 3);
  m.layers[0].wq = LinearSlot(Matrix(8, 8));
  m.layers[0].wk = LinearSlot(Matrix(8, 8));
  std::mt19937_64 rng(4);
  AttentionCache cache;
  attention_forward(m.layers[0], oracle::random_matrix(6, 8, rng), 0, cache);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(cache.weights[0](i, j), 1.0 / 6.0);
}

TEST(Attention, MatchesStraightLineOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Model m = Model::random(small_dims(), seed);
    std::mt19937_64 rng(seed + 100);
    const Matrix x = oracle::random_matrix(7, 8, rng);
    AttentionCache cache;
    const Matrix out = attention_forward(m.layers[0], x, 0, cache);
    const EncoderLayer& l = m.layers[0];
    const Matrix expected =
        oracle::straight_line_attention(x, l.wq.weight(), l.wk.weight(), l.wv.weight(), l.wo);
    EXPECT_LT(max_abs_diff(out, expected), 1e-12);
  }
}

TEST(Attention, RowsSumToOneForEveryHead) {
  Model m = Model::random(small_dims(4), 5);
  std::mt19937_64 rng(6);
  AttentionCache cache;
  attention_forward(m.layers[0], oracle::random_matrix(9, 8, rng, 3.0), 0, cache);
  ASSERT_EQ(cache.weights.size(), 4u);
  for (const Matrix& w : cache.weights) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < w.cols(); ++j) total += w(i, j);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Attention, NonFiniteInputNamesLayer) {
  Model m = Model::random(small_dims(1, 2), 7);
  Matrix x(3, 8, 1.0);
  x(1, 1) = std::numeric_limits<double>::infinity();
  AttentionCache cache;
  try {
    attention_forward(m.layers[1], x, 1, cache);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(Forward, ZeroLayersPoolsProjectedFrames) {
  ModelDims d = small_dims(1, 0);
  d.d_in = 8;
  Model m = Model::random(d, 8);
  m.input_proj = Matrix::identity(8);
  m.refresh();
  std::mt19937_64 rng(9);
  const Matrix frames = oracle::random_matrix(5, 8, rng);
  const std::vector<double> e = model_forward(m, frames).embedding;
  for (std::size_t c = 0; c < 8; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 5; ++t) mean += frames(t, c);
    EXPECT_NEAR(e[c], mean / 5.0, 1e-15);
  }
}

TEST(Forward, DuplicatedFramesMatchSingleFrame) {
  Model m = Model::random(small_dims(2, 2), 10);
  std::mt19937_64 rng(11);
  const Matrix one = oracle::random_matrix(1, 5, rng);
  Matrix many(4, 5);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 5; ++c) many(t, c) = one(0, c);
  EXPECT_LT(oracle::relative_error(model_forward(m, one).embedding, model_forward(m, many).embedding),
            1e-13);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Model m = Model::random(small_dims(), 12);
  std::mt19937_64 rng(13);
  const ForwardResult f = model_forward(m, oracle::random_matrix(4, 5, rng));
  const std::vector<double> zero(8, 0.0);
  for (const NamedGrad& g : model_backward(m, f.cache, zero)) EXPECT_EQ(max_abs(g.grad), 0.0) << g.name;
}

TEST(Backward, FrozenModelHasNoGradients) {
  Model m = Model::random(small_dims(), 14);
  m.dense_trainable = false;
  std::mt19937_64 rng(15);
  const ForwardResult f = model_forward(m, oracle::random_matrix(4, 5, rng));
  EXPECT_TRUE(model_backward(m, f.cache, std::vector<double>(8, 1.0)).empty());
}

TEST(Backward, RejectsStaleCache) {
  Model a = Model::random(small_dims(), 16);
  ModelDims wide = small_dims();
  wide.d = 12;
  Model b = Model::random(wide, 16);
  std::mt19937_64 rng(17);
  const ForwardResult f = model_forward(b, oracle::random_matrix(4, 5, rng));
  EXPECT_THROW(model_backward(a, f.cache, std::vector<double>(8, 1.0)), ShapeError);
}

// Total AAM loss of one utterance; the callback for finite differences.
double total_loss(Model& m, const Matrix& frames, std::size_t label, const AamConfig& aam) {
  m.refresh();
  const ForwardResult f = model_forward(m, frames);
  return aam_loss(f.embedding, label, m.classifier, aam).loss;
}

TEST(EndToEndGradient, EveryVariantAndPositionSet) {
  const std::vector<std::vector<Projection>> position_sets = {
      {Projection::kQuery},
      {Projection::kQuery, Projection::kKey},
      {Projection::kQuery, Projection::kKey, Projection::kValue}};
  for (AdapterKind kind : {AdapterKind::kLora, AdapterKind::kDora, AdapterKind::kSpectral,
                           AdapterKind::kSpectralPlusMinor, AdapterKind::kTruncatedFrozen,
                           AdapterKind::kFullFrozen}) {
    for (const auto& positions : position_sets) {
      for (std::uint64_t seed = 0; seed < 2; ++seed) {
        const check::GradientReport r = check::end_to_end_gradient(kind, positions, 1, 200 + seed);
        EXPECT_TRUE(r.names_match);
        EXPECT_LT(r.worst, 1e-5) << to_string(kind) << " positions=" << positions.size()
                                 << " seed=" << seed << " " << r.worst_param;
      }
    }
  }
}

TEST(EndToEndGradient, MultiHeadSpectral) {
  const check::GradientReport r = check::end_to_end_gradient(
      AdapterKind::kSpectral, {Projection::kQuery, Projection::kKey}, 2, 300);
  EXPECT_LT(r.worst, 1e-5) << r.worst_param;
}

TEST(EndToEndGradient, DenseWeightsDuringPretraining) {
  Model m = Model::random(small_dims(2, 2), 400);
  std::mt19937_64 rng(401);
  const Matrix frames = oracle::random_matrix(4, 5, rng);
  AamConfig aam;
  aam.scale = 10.0;
  const ForwardResult f = model_forward(m, frames);
  const AamResult loss = aam_loss(f.embedding, 3, m.classifier, aam);
  GradientSet analytic = model_backward(m, f.cache, loss.grad_embedding);
  analytic.push_back({"classifier", loss.grad_classifier});
  std::vector<NamedParam> params = m.trainable_params();
  ASSERT_EQ(params.size(), analytic.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix numeric =
        oracle::numeric_gradient(*params[i].value, [&] { return total_loss(m, frames, 3, aam); });
    EXPECT_LT(oracle::relative_error(analytic[i].grad, numeric), 1e-5) << params[i].name;
  }
}

TEST(MergedCopy, ReplacesAdaptedSlots) {
  Model m = Model::random(small_dims(), 500);
  m.dense_trainable = false;
  AdapterConfig cfg;
  cfg.kind = AdapterKind::kLora;
  cfg.rank = 2;
  attach_adapters(m, cfg, {Projection::kValue}, 1);
  ASSERT_TRUE(m.layers[0].wv.adapted());
  const Model merged = merged_copy(m);
  EXPECT_FALSE(merged.layers[0].wv.adapted());
  EXPECT_EQ(merged.layers[0].wv.weight(), m.layers[0].wv.weight());
}

TEST(Projections, ParseNames) {
  EXPECT_EQ(parse_projection("q"), Projection::kQuery);
  EXPECT_EQ(parse_projection("v"), Projection::kValue);
  EXPECT_EQ(to_string(Projection::kKey), "k");
  EXPECT_THROW(parse_projection("o"), ConfigError);
}

}  // namespace
}  // namespace spectral
