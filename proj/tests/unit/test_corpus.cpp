// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "spectral/corpus.hpp"
#include "spectral/errors.hpp"
#include "spectral/metrics.hpp"

namespace spectral {
namespace {

std::vector<double> frame_mean(const Matrix& frames) {
  std::vector<double> mean(frames.cols(), 0.0);
  for (std::size_t t = 0; t < frames.rows(); ++t)
    for (std::size_t c = 0; c < frames.cols(); ++c) mean[c] += frames(t, c) / frames.rows();
  return mean;
}

TEST(Corpus, ShapesAndCounts) {
  CorpusSpec spec;
  const Corpus c = generate_corpus(spec);
  EXPECT_EQ(c.pretrain.size(), 20u * 10u);
  EXPECT_EQ(c.enroll.size(), 10u * 4u);
  EXPECT_EQ(c.test.size(), 10u * 4u);
  EXPECT_EQ(c.trials.size(), 40u * 40u);
  EXPECT_EQ(c.pretrain[0].frames.rows(), 20u);
  EXPECT_EQ(c.pretrain[0].frames.cols(), 16u);
  std::size_t targets = 0;
  for (const TrialPair& p : c.trials) targets += p.is_target;
  EXPECT_EQ(targets, 10u * 4u * 4u);
}

TEST(Corpus, SameSeedIsBitIdentical) {
  CorpusSpec spec;
  spec.seed = 5;
  const Corpus a = generate_corpus(spec);
  const Corpus b = generate_corpus(spec);
  for (std::size_t i = 0; i < a.pretrain.size(); ++i) EXPECT_EQ(a.pretrain[i].frames, b.pretrain[i].frames);
  for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].frames, b.test[i].frames);
  spec.seed = 6;
  EXPECT_NE(generate_corpus(spec).enroll[0].frames, a.enroll[0].frames);
}

TEST(Corpus, SpeakersAndUtterancesAreDisjoint) {
  const Corpus c = generate_corpus(CorpusSpec{});
  std::set<std::string> pre, fine, enroll_ids;
  for (const Utterance& u : c.pretrain) pre.insert(u.speaker_id);
  for (const Utterance& u : c.enroll) {
    fine.insert(u.speaker_id);
    enroll_ids.insert(u.id);
  }
  for (const Utterance& u : c.test) {
    fine.insert(u.speaker_id);
    EXPECT_FALSE(enroll_ids.count(u.id)) << u.id;
  }
  for (const std::string& s : fine) EXPECT_FALSE(pre.count(s)) << s;
  EXPECT_EQ(pre.size(), 20u);
  EXPECT_EQ(fine.size(), 10u);
}

TEST(Corpus, NoiselessUtterancesSeparatePerfectly) {
  CorpusSpec spec;
  spec.frame_noise = 0.0;
  spec.session_spread = 0.0;
  const Corpus c = generate_corpus(spec);
  for (std::size_t i = 1; i < c.enroll.size(); ++i) {
    if (c.enroll[i].speaker == c.enroll[i - 1].speaker)
      EXPECT_EQ(c.enroll[i].frames, c.enroll[i - 1].frames);
  }
  std::vector<Trial> trials;
  for (const TrialPair& p : c.trials) {
    trials.push_back({cosine_score(frame_mean(c.enroll[p.enroll].frames),
                                   frame_mean(c.test[p.test].frames)),
                      p.is_target, c.enroll[p.enroll].id, c.test[p.test].id});
  }
  EXPECT_EQ(compute_eer(TrialSet(std::move(trials))).eer, 0.0);
}

TEST(Corpus, SessionOffsetsVaryUtterancesOfOneSpeaker) {
  CorpusSpec spec;
  spec.frame_noise = 0.0;
  spec.session_spread = 1.0;
  const Corpus c = generate_corpus(spec);
  EXPECT_NE(c.enroll[0].frames, c.enroll[1].frames);
  EXPECT_EQ(c.enroll[0].speaker, c.enroll[1].speaker);
}

TEST(Corpus, ValidationErrors) {
  CorpusSpec spec;
  spec.n_finetune_speakers = 1;
  EXPECT_THROW(generate_corpus(spec), ConfigError);
  spec = CorpusSpec{};
  spec.frame_noise = -1.0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = CorpusSpec{};
  spec.nuisance_dims = 17;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = CorpusSpec{};
  spec.enroll_per_speaker = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Corpus, AllPairsLabelsBySpeaker) {
  const Corpus c = generate_corpus(CorpusSpec{});
  const auto pairs = all_pairs(c.enroll, c.test);
  ASSERT_EQ(pairs.size(), c.trials.size());
  for (const TrialPair& p : pairs)
    EXPECT_EQ(p.is_target, c.enroll[p.enroll].speaker_id == c.test[p.test].speaker_id);
}

}  // namespace
}  // namespace spectral
