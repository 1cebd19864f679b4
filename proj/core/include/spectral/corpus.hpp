// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spectral/matrix.hpp"

namespace spectral {

/// Synthetic speaker corpus: every speaker has a mean vector drawn from
/// N(0, speaker_spread²·I) and each utterance is a run of frames drawn from
/// N(mean + session, frame_noise²·I).
///
/// `session` is a per-utterance offset N(0, session_spread²) inside a random
/// nuisance_dims-dimensional subspace. Pretraining and fine-tuning speakers
/// use different subspaces, so the fine-tuning domain carries session
/// variability the pretrained model never saw.
struct CorpusSpec {
  std::size_t n_pretrain_speakers = 20;
  std::size_t n_finetune_speakers = 10;
  /// Utterances per pretraining speaker.
  std::size_t utterances_per_speaker = 10;
  /// Each finetune speaker gets enroll_per_speaker + test_per_speaker utterances.
  std::size_t enroll_per_speaker = 4;
  std::size_t test_per_speaker = 4;
  std::size_t frames_per_utterance = 20;
  std::size_t d_in = 16;
  double speaker_spread = 1.0;
  double frame_noise = 2.0;
  double session_spread = 2.0;
  std::size_t nuisance_dims = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Utterance {
  std::string id;
  std::string speaker_id;
  std::size_t speaker = 0;  // index within its own split
  Matrix frames;            // T×d_in
};

struct TrialPair {
  std::size_t enroll = 0;  // index into Corpus::enroll
  std::size_t test = 0;    // index into Corpus::test
  bool is_target = false;
};

struct Corpus {
  std::vector<Utterance> pretrain;
  std::vector<Utterance> enroll;
  std::vector<Utterance> test;
  std::vector<TrialPair> trials;  // every enroll × test pair
  std::size_t n_pretrain_speakers = 0;
  std::size_t n_finetune_speakers = 0;
};

/// Deterministic per spec.seed. Pretrain and finetune speakers are disjoint;
/// each finetune speaker's enroll and test utterances are disjoint.
Corpus generate_corpus(const CorpusSpec& spec);

/// Every pair between two utterance lists, labelled by speaker identity.
std::vector<TrialPair> all_pairs(const std::vector<Utterance>& enroll,
                                 const std::vector<Utterance>& test);

}  // namespace spectral
