// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "spectral/errors.hpp"
#include "spectral/experiment.hpp"
#include "spectral/serialization.hpp"

namespace spectral {
namespace {

TEST(MatrixJson, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  const Matrix m = oracle::random_matrix(3, 5, rng);
  EXPECT_EQ(matrix_from_json(nlohmann::json::parse(to_json(m).dump())), m);
}

TEST(MatrixJson, RejectsInconsistentShape) {
  EXPECT_THROW(matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}, {"data", {1, 2, 3}}}),
               ConfigError);
  EXPECT_THROW(matrix_from_json(nlohmann::json{{"rows", 1}}), ConfigError);
}

TEST(ModelJson, RoundTripKeepsEveryWeight) {
  ModelDims dims;
  dims.d_in = 4;
  dims.d = 8;
  dims.hidden = 6;
  dims.layers = 2;
  dims.heads = 2;
  dims.classes = 3;
  Model m = Model::random(dims, 3);
  m.dense_trainable = false;
  AdapterConfig cfg;
  cfg.kind = AdapterKind::kSpectralPlusMinor;
  cfg.rank = 2;
  cfg.principal_count = 4;
  attach_adapters(m, cfg, {Projection::kQuery, Projection::kValue}, 5);
  const Model back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.dims.layers, 2u);
  EXPECT_EQ(back.dims.heads, 2u);
  EXPECT_FALSE(back.dense_trainable);
  EXPECT_EQ(back.input_proj, m.input_proj);
  EXPECT_EQ(back.classifier, m.classifier);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_TRUE(back.layers[l].wq.adapted());
    EXPECT_FALSE(back.layers[l].wk.adapted());
    EXPECT_EQ(back.layers[l].wq.weight(), m.layers[l].wq.weight());
    EXPECT_EQ(back.layers[l].wk.weight(), m.layers[l].wk.weight());
    EXPECT_EQ(back.layers[l].ffn2, m.layers[l].ffn2);
  }
  EXPECT_EQ(back.param_count(), m.param_count());
}

TEST(Files, AtomicWriteReplacesContents) {
  const auto dir = std::filesystem::temp_directory_path() / "spectral_atomic_write_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.json";
  write_json_file(path, nlohmann::json{{"a", 1}});
  write_json_file(path, nlohmann::json{{"a", 2}});
  EXPECT_EQ(read_json_file(path).at("a"), 2);
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    EXPECT_EQ(entry.path().filename(), "out.json");
  std::filesystem::remove_all(dir);
}

TEST(Files, MissingOrMalformedInput) {
  EXPECT_THROW(read_json_file("/nonexistent/spectral/config.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "spectral_bad.json";
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(read_json_file(path), ConfigError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace spectral
