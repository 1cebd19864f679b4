// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "spectral/errors.hpp"
#include "spectral/sweep.hpp"

namespace spectral {
namespace {

ExperimentConfig tiny_base() {
  ExperimentConfig cfg;
  cfg.name = "sweep";
  cfg.corpus.n_pretrain_speakers = 4;
  cfg.corpus.n_finetune_speakers = 3;
  cfg.corpus.utterances_per_speaker = 3;
  cfg.corpus.enroll_per_speaker = 2;
  cfg.corpus.test_per_speaker = 2;
  cfg.corpus.frames_per_utterance = 4;
  cfg.corpus.d_in = 6;
  cfg.corpus.nuisance_dims = 2;
  cfg.model.d = 16;
  cfg.model.hidden = 8;
  cfg.adapter.rank = 4;
  cfg.train.pretrain_epochs = 1;
  cfg.train.epochs = 1;
  return cfg;
}

TEST(SweepCells, GridSizesAndContents) {
  const ExperimentConfig base = tiny_base();
  EXPECT_EQ(sweep_cells(SweepMode::kRank, base).size(), 5u);
  EXPECT_EQ(sweep_cells(SweepMode::kPrincipalK, base).size(), 4u);
  EXPECT_EQ(sweep_cells(SweepMode::kSubspace, base).size(), 4u);
  const auto positions = sweep_cells(SweepMode::kPositions, base);
  ASSERT_EQ(positions.size(), 9u);
  for (const SweepCell& c : positions) {
    EXPECT_DOUBLE_EQ(c.config.adapter.resolved_alpha(), static_cast<double>(c.config.adapter.rank));
  }
  const auto k_cells = sweep_cells(SweepMode::kPrincipalK, base);
  EXPECT_EQ(k_cells.front().config.adapter.principal_count, 2u);
  EXPECT_EQ(k_cells.back().config.adapter.principal_count, 16u);
  for (const SweepCell& c : k_cells) EXPECT_LT(c.config.adapter.rank, 2u);
}

TEST(SweepCells, ModeNames) {
  for (SweepMode m : {SweepMode::kRank, SweepMode::kPrincipalK, SweepMode::kSubspace,
                      SweepMode::kPositions})
    EXPECT_EQ(parse_sweep_mode(to_string(m)), m);
  EXPECT_THROW(parse_sweep_mode("depth"), ConfigError);
}

TEST(RunSweep, SubspaceAndPositionsCompleteEveryCell) {
  for (SweepMode mode : {SweepMode::kSubspace, SweepMode::kPositions}) {
    const SweepTable table = run_sweep(mode, tiny_base(), 2);
    ASSERT_EQ(table.rows.size(), mode == SweepMode::kSubspace ? 4u : 9u);
    for (const SweepRow& row : table.rows) {
      EXPECT_TRUE(row.result.has_value()) << row.label << ": " << row.error;
    }
  }
}

TEST(RunSweep, RankTrainablesIncreaseWithRank) {
  const SweepTable table = run_sweep(SweepMode::kRank, tiny_base(), 3);
  ASSERT_EQ(table.rows.size(), 5u);
  std::size_t previous = 0;
  for (const SweepRow& row : table.rows) {
    if (!row.result) continue;
    EXPECT_GT(row.result->adapter_params.trainable, previous) << row.label;
    previous = row.result->adapter_params.trainable;
  }
}

TEST(RunSweep, OutputIndependentOfThreadCount) {
  auto render = [](std::size_t jobs) {
    SweepTable t = run_sweep(SweepMode::kSubspace, tiny_base(), jobs);
    for (SweepRow& row : t.rows)
      if (row.result) row.result->wall_seconds = 0.0;
    std::ostringstream out;
    write_sweep_csv(out, t);
    return out.str();
  };
  EXPECT_EQ(render(1), render(4));
}

TEST(RunSweep, CsvHasNotesHeaderAndRows) {
  const SweepTable table = run_sweep(SweepMode::kSubspace, tiny_base(), 2);
  std::ostringstream out;
  write_sweep_csv(out, table);
  std::istringstream in(out.str());
  std::string line;
  std::size_t notes = 0, rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      ++notes;
    } else if (line.rfind("mode,cell,method", 0) == 0) {
      header = true;
    } else if (!line.empty()) {
      ++rows;
      EXPECT_EQ(line.rfind("subspace,", 0), 0u) << line;
    }
  }
  EXPECT_GT(notes, 0u);
  EXPECT_TRUE(header);
  EXPECT_EQ(rows, 4u);
}

}  // namespace
}  // namespace spectral
