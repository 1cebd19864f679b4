// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ostream>
#include <thread>

#include "spectral/diagnostics.hpp"
#include "spectral/errors.hpp"

namespace spectral {
namespace {

constexpr std::size_t kRankGrid[] = {2, 4, 8, 16, 32};

std::string positions_label(const std::vector<Projection>& positions) {
  std::string s;
  for (Projection p : positions) {
    if (!s.empty()) s += '+';
    s += to_string(p);
  }
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Quotes a CSV field when it contains a separator or quote.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::size_t principal_floor(const ExperimentConfig& base) {
  return std::max<std::size_t>(1, base.model.d / 8);
}

}  // namespace

std::string_view to_string(SweepMode mode) noexcept {
  switch (mode) {
    case SweepMode::kRank:
      return "rank";
    case SweepMode::kPrincipalK:
      return "principal_k";
    case SweepMode::kSubspace:
      return "subspace";
    case SweepMode::kPositions:
      return "positions";
  }
  return "?";
}

SweepMode parse_sweep_mode(std::string_view name) {
  for (SweepMode m : {SweepMode::kRank, SweepMode::kPrincipalK, SweepMode::kSubspace,
                      SweepMode::kPositions})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown sweep mode '" + std::string(name) +
                    "' (expected rank, principal_k, subspace or positions)");
}

std::vector<SweepCell> sweep_cells(SweepMode mode, const ExperimentConfig& base,
                                   double positions_alpha_over_r) {
  std::vector<SweepCell> cells;
  const double base_ratio = base.adapter.resolved_alpha() / static_cast<double>(base.adapter.rank);
  switch (mode) {
    case SweepMode::kRank:
      for (std::size_t r : kRankGrid) {
        ExperimentConfig c = base;
        if (!has_trainable_delta(c.adapter.kind)) c.adapter.kind = AdapterKind::kSpectral;
        c.adapter.rank = r;
        c.adapter.alpha = base_ratio * static_cast<double>(r);
        c.name = base.name + "_rank" + std::to_string(r);
        cells.push_back({"r=" + std::to_string(r), std::move(c)});
      }
      break;
    case SweepMode::kPrincipalK: {
      const std::size_t d = base.model.d;
      const std::size_t smallest_k = principal_floor(base);
      const std::size_t rank = std::min(base.adapter.rank, smallest_k > 1 ? smallest_k - 1 : 1);
      for (std::size_t k : {d / 8, d / 4, d / 2, d}) {
        ExperimentConfig c = base;
        c.adapter.kind = AdapterKind::kSpectral;
        c.adapter.principal_count = std::max<std::size_t>(k, 1);
        c.adapter.rank = rank;
        c.adapter.alpha = base_ratio * static_cast<double>(rank);
        c.name = base.name + "_k" + std::to_string(c.adapter.principal_count);
        cells.push_back({"k=" + std::to_string(c.adapter.principal_count), std::move(c)});
      }
      break;
    }
    case SweepMode::kSubspace:
      for (AdapterKind kind : {AdapterKind::kSpectral, AdapterKind::kTruncatedFrozen,
                               AdapterKind::kSpectralPlusMinor, AdapterKind::kFullFrozen}) {
        ExperimentConfig c = base;
        c.adapter.kind = kind;
        c.name = base.name + "_" + std::string(to_string(kind));
        cells.push_back({std::string(to_string(kind)), std::move(c)});
      }
      break;
    case SweepMode::kPositions: {
      const std::vector<std::vector<Projection>> sets = {
          {Projection::kQuery},
          {Projection::kQuery, Projection::kKey},
          {Projection::kQuery, Projection::kKey, Projection::kValue}};
      for (AdapterKind kind : {AdapterKind::kLora, AdapterKind::kDora, AdapterKind::kSpectral}) {
        for (const auto& positions : sets) {
          ExperimentConfig c = base;
          c.adapter.kind = kind;
          c.adapter.alpha = positions_alpha_over_r * static_cast<double>(c.adapter.rank);
          c.positions = positions;
          const std::string label = std::string(to_string(kind)) + "@" + positions_label(positions);
          c.name = base.name + "_" + std::string(to_string(kind)) + "_" + positions_label(positions);
          cells.push_back({label, std::move(c)});
        }
      }
      break;
    }
  }
  return cells;
}

std::vector<std::string> sweep_notes(SweepMode mode, const ExperimentConfig& base) {
  const std::size_t d = base.model.d;
  std::vector<std::string> notes;
  notes.push_back("mode=" + std::string(to_string(mode)) + " d=" + std::to_string(d) +
                  " seed=" + std::to_string(base.seed));
  switch (mode) {
    case SweepMode::kRank:
      notes.push_back("rank grid r in {2,4,8,16,32} at fixed alpha/r; cells with r >= k are "
                      "rejected by the spectral adapter");
      break;
    case SweepMode::kPrincipalK:
      notes.push_back("k grid {d/8,d/4,d/2,d} = {" + std::to_string(d / 8) + "," +
                      std::to_string(d / 4) + "," + std::to_string(d / 2) + "," +
                      std::to_string(d) + "} (full-scale grid {64..1024} at d=1024 scaled to d)");
      notes.push_back("rank held below the smallest k");
      break;
    case SweepMode::kSubspace:
      notes.push_back("principal+delta, principal frozen, principal+delta+minor frozen, "
                      "full weight frozen");
      break;
    case SweepMode::kPositions:
      notes.push_back("adapted projections {q}, {q,k}, {q,k,v} for lora, dora, spectral");
      break;
  }
  return notes;
}

SweepTable run_sweep(SweepMode mode, const ExperimentConfig& base, std::size_t jobs,
                     double positions_alpha_over_r) {
  base.validate();
  SweepTable table;
  table.mode = mode;
  table.notes = sweep_notes(mode, base);
  const std::vector<SweepCell> cells = sweep_cells(mode, base, positions_alpha_over_r);

  const Corpus corpus = generate_corpus(base.corpus);
  std::vector<double> pretrain_losses;
  const Model pretrained = pretrain(base, corpus, &pretrain_losses);
  diag::take_warnings();

  table.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepRow& row = table.rows[i];
      row.label = cells[i].label;
      row.config = cells[i].config;
      try {
        FinetuneOutput out = finetune(pretrained, cells[i].config, corpus);
        out.result.pretrain_losses = pretrain_losses;
        row.result = std::move(out.result);
      } catch (const Error& e) {
        row.error = e.what();
        diag::take_warnings();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, cells.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return table;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  for (const std::string& note : table.notes) out << "# " << note << '\n';
  out << "mode,cell,method,positions,r,k,alpha,trainable,frozen,final_loss,eer,min_dcf,status,"
         "error\n";
  for (const SweepRow& row : table.rows) {
    const ExperimentConfig& c = row.config;
    out << to_string(table.mode) << ',' << csv_field(row.label) << ',' << to_string(c.adapter.kind)
        << ',' << positions_label(c.positions) << ',' << c.adapter.rank << ',';
    if (row.result) {
      const RunResult& r = *row.result;
      out << r.effective_k << ',' << fmt(r.alpha) << ',' << r.adapter_params.trainable << ','
          << r.adapter_params.frozen << ',' << fmt(r.final_train_loss()) << ',' << fmt(r.eer)
          << ',' << fmt(r.min_dcf) << ",ok,\n";
    } else {
      out << c.adapter.principal_count << ',' << fmt(c.adapter.resolved_alpha())
          << ",,,,,,error," << csv_field(row.error) << '\n';
    }
  }
}

}  // namespace spectral
