// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spectral/experiment.hpp"

namespace spectral {

enum class SweepMode { kRank, kPrincipalK, kSubspace, kPositions };

std::string_view to_string(SweepMode mode) noexcept;
/// "rank", "principal_k", "subspace" or "positions"; ConfigError otherwise.
SweepMode parse_sweep_mode(std::string_view name);

struct SweepCell {
  std::string label;
  ExperimentConfig config;
};

/// Grid of one sweep, scaled to the model dimension d:
///   rank         r in {2, 4, 8, 16, 32}, alpha/r held at the base ratio
///   principal_k  k in {d/8, d/4, d/2, d} (spectral), r capped below d/8
///   subspace     spectral, truncated_frozen, spectral_plus_minor, full_frozen
///   positions    {q}, {q,k}, {q,k,v} for each of lora, dora, spectral at
///                alpha/r = positions_alpha_over_r
std::vector<SweepCell> sweep_cells(SweepMode mode, const ExperimentConfig& base,
                                   double positions_alpha_over_r = 1.0);

/// Human-readable description of the grid, written as '#' lines above the CSV.
std::vector<std::string> sweep_notes(SweepMode mode, const ExperimentConfig& base);

struct SweepRow {
  std::string label;
  ExperimentConfig config;
  std::optional<RunResult> result;  // empty when the cell failed
  std::string error;
};

struct SweepTable {
  SweepMode mode = SweepMode::kRank;
  std::vector<std::string> notes;
  std::vector<SweepRow> rows;
};

/// Generates the corpus and pretrains once, then fine-tunes every cell from
/// that shared model. A failing cell becomes an error row; the sweep goes on.
/// Cells run on up to `jobs` threads; row order and contents do not depend on it.
SweepTable run_sweep(SweepMode mode, const ExperimentConfig& base, std::size_t jobs = 1,
                     double positions_alpha_over_r = 1.0);

/// Header: mode,cell,method,positions,r,k,alpha,trainable,frozen,final_loss,
/// eer,min_dcf,status,error
void write_sweep_csv(std::ostream& out, const SweepTable& table);

}  // namespace spectral
