// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "spectral/errors.hpp"
#include "spectral/svd.hpp"

namespace spectral {
namespace {

std::string speaker_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

// Orthonormal d_in×nuisance_dims basis of a random subspace.
Matrix nuisance_basis(const CorpusSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(spec.d_in, spec.nuisance_dims);
  for (double& v : g.data()) v = normal(rng);
  return svd(g).u.left_columns(spec.nuisance_dims);
}

Utterance draw_utterance(const std::string& speaker_id, std::size_t speaker, std::size_t index,
                         std::vector<double> mean, const Matrix& nuisance,
                         const CorpusSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t j = 0; j < nuisance.cols(); ++j) {
    const double offset = spec.session_spread * noise(rng);
    for (std::size_t c = 0; c < spec.d_in; ++c) mean[c] += offset * nuisance(c, j);
  }
  Utterance u;
  u.speaker_id = speaker_id;
  u.speaker = speaker;
  u.id = speaker_id + "_utt" + std::to_string(index);
  u.frames = Matrix(spec.frames_per_utterance, spec.d_in);
  for (std::size_t t = 0; t < spec.frames_per_utterance; ++t)
    for (std::size_t c = 0; c < spec.d_in; ++c)
      u.frames(t, c) = mean[c] + spec.frame_noise * noise(rng);
  return u;
}

std::vector<double> draw_mean(const CorpusSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> mean(spec.d_in);
  for (double& v : mean) v = spec.speaker_spread * normal(rng);
  return mean;
}

}  // namespace

void CorpusSpec::validate() const {
  if (n_finetune_speakers < 2) throw ConfigError("corpus needs at least 2 finetune speakers");
  if (n_pretrain_speakers < 2) throw ConfigError("corpus needs at least 2 pretrain speakers");
  if (utterances_per_speaker < 1 || enroll_per_speaker < 1 || test_per_speaker < 1) {
    throw ConfigError("utterance counts must be positive");
  }
  if (frames_per_utterance < 1 || d_in < 1) throw ConfigError("frames and d_in must be positive");
  if (!(speaker_spread >= 0.0) || !(frame_noise >= 0.0) || !(session_spread >= 0.0)) {
    throw ConfigError("speaker_spread, frame_noise and session_spread must be non-negative");
  }
  if (nuisance_dims < 1 || nuisance_dims > d_in) {
    throw ConfigError("nuisance_dims must lie in [1, d_in]");
  }
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Corpus c;
  c.n_pretrain_speakers = spec.n_pretrain_speakers;
  c.n_finetune_speakers = spec.n_finetune_speakers;
  const Matrix pretrain_nuisance = nuisance_basis(spec, rng);
  const Matrix finetune_nuisance = nuisance_basis(spec, rng);
  for (std::size_t s = 0; s < spec.n_pretrain_speakers; ++s) {
    const std::string name = speaker_name("pre", s);
    const auto mean = draw_mean(spec, rng);
    for (std::size_t u = 0; u < spec.utterances_per_speaker; ++u)
      c.pretrain.push_back(draw_utterance(name, s, u, mean, pretrain_nuisance, spec, rng));
  }
  for (std::size_t s = 0; s < spec.n_finetune_speakers; ++s) {
    const std::string name = speaker_name("ft", s);
    const auto mean = draw_mean(spec, rng);
    std::size_t index = 0;
    for (std::size_t u = 0; u < spec.enroll_per_speaker; ++u)
      c.enroll.push_back(draw_utterance(name, s, index++, mean, finetune_nuisance, spec, rng));
    for (std::size_t u = 0; u < spec.test_per_speaker; ++u)
      c.test.push_back(draw_utterance(name, s, index++, mean, finetune_nuisance, spec, rng));
  }
  c.trials = all_pairs(c.enroll, c.test);
  return c;
}

std::vector<TrialPair> all_pairs(const std::vector<Utterance>& enroll,
                                 const std::vector<Utterance>& test) {
  std::vector<TrialPair> out;
  out.reserve(enroll.size() * test.size());
  for (std::size_t e = 0; e < enroll.size(); ++e)
    for (std::size_t t = 0; t < test.size(); ++t)
      out.push_back({e, t, enroll[e].speaker_id == test[t].speaker_id});
  return out;
}

}  // namespace spectral
