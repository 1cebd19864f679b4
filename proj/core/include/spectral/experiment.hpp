// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral/aam_loss.hpp"
#include "spectral/adapter.hpp"
#include "spectral/corpus.hpp"
#include "spectral/encoder.hpp"
#include "spectral/metrics.hpp"

namespace spectral {

struct AdapterConfig {
  AdapterKind kind = AdapterKind::kSpectral;
  std::size_t rank = 16;
  /// Clamped to min(m, n) at attach time.
  std::size_t principal_count = 256;
  /// Explicit alpha; when absent alpha = alpha_over_r · rank.
  std::optional<double> alpha;
  double alpha_over_r = 0.1;

  double resolved_alpha() const {
    return alpha ? *alpha : alpha_over_r * static_cast<double>(rank);
  }
};

struct TrainConfig {
  std::size_t pretrain_epochs = 40;
  double pretrain_lr = 3e-3;
  /// Pretraining stops once the loss improved by less than this over
  /// plateau_window epochs.
  double plateau_tolerance = 1e-4;
  std::size_t plateau_window = 3;
  std::size_t epochs = 30;
  double lr = 1e-3;
  std::size_t batch_size = 8;
};

struct ExperimentConfig {
  std::string name = "default";
  CorpusSpec corpus;
  ModelDims model;  // classes is derived from the corpus
  AdapterConfig adapter;
  std::vector<Projection> positions = {Projection::kQuery, Projection::kKey, Projection::kValue};
  TrainConfig train;
  AamConfig aam;
  DcfParams metric;
  std::uint64_t seed = 0;

  void validate() const;
  /// Sets both the experiment and the corpus seed.
  void set_seed(std::uint64_t s);
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing fields keep their defaults. ConfigError on wrong types or values.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct RunResult {
  ExperimentConfig config;
  std::string status = "ok";  // "ok" or "error"
  std::string error;
  std::vector<double> pretrain_losses;
  std::vector<double> train_losses;
  /// Summed over attached adapters.
  ParamCount adapter_params;
  /// Whole fine-tuned model, classifier included.
  ParamCount model_params;
  std::size_t effective_k = 0;
  double alpha = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double min_dcf = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  double final_train_loss() const { return train_losses.empty() ? 0.0 : train_losses.back(); }
};

nlohmann::json to_json(const RunResult& r);
RunResult run_result_from_json(const nlohmann::json& j);

struct FinetuneOutput {
  Model model;
  RunResult result;
  TrialSet trials;
};

/// AAM-Softmax training with Adam over `data`; labels are Utterance::speaker.
/// Returns the mean loss of each epoch. With a plateau window, stops early once
/// the loss improved by less than `tolerance` over that many epochs.
std::vector<double> train_model(Model& model, const std::vector<Utterance>& data,
                                std::size_t epochs, double lr, std::size_t batch_size,
                                const AamConfig& aam, std::uint64_t seed,
                                std::size_t plateau_window = 0, double tolerance = 0.0);

/// Randomly initialized model trained on the pretraining speakers; every
/// weight is dense-frozen afterwards. NumericError on divergence.
Model pretrain(const ExperimentConfig& cfg, const Corpus& corpus,
               std::vector<double>* losses = nullptr);

/// Attaches the configured adapter at the configured positions of every
/// layer. k above min(m, n) is clamped with a warning.
void attach_adapters(Model& model, const AdapterConfig& adapter,
                     const std::vector<Projection>& positions, std::uint64_t seed);

std::vector<std::vector<double>> embed_all(const Model& model,
                                           const std::vector<Utterance>& utterances);

/// Cosine-scores every corpus trial with the model's embeddings.
TrialSet score_trials(const Model& model, const Corpus& corpus);

/// Trains adapter deltas and a fresh classifier on the enrollment utterances,
/// then scores the enroll × test trials.
FinetuneOutput finetune(const Model& pretrained, const ExperimentConfig& cfg, const Corpus& corpus);

/// Artifacts of one full run.
struct RunArtifacts {
  RunResult result;
  TrialSet trials;
  Model model;
};

/// generate_corpus → pretrain → finetune → evaluate.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Writes config.json, result.json, trials.csv and checkpoint.json into `dir`.
void save_run(const std::filesystem::path& dir, const RunArtifacts& run);

/// `root/<YYYYmmdd-HHMMSS>_<name>`, suffixed when it already exists.
std::filesystem::path new_run_directory(const std::filesystem::path& root, const std::string& name);

}  // namespace spectral
