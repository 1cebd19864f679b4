// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run, sweep, eval, inspect.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "spectral/errors.hpp"
#include "spectral/experiment.hpp"
#include "spectral/metrics.hpp"
#include "spectral/serialization.hpp"
#include "spectral/svd.hpp"
#include "spectral/sweep.hpp"

namespace {

using namespace spectral;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr std::size_t kTopSingularValues = 5;

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = experiment_config_from_json(read_json_file(path));
  if (seed) cfg.set_seed(*seed);
  return cfg;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
  const ExperimentConfig cfg = load_config(config, seed);
  const RunArtifacts run = run_experiment(cfg);
  const auto dir = new_run_directory(out, cfg.name);
  save_run(dir, run);
  nlohmann::json summary = {{"run_dir", dir.string()},
                            {"seed", cfg.seed},
                            {"eer", run.result.eer},
                            {"min_dcf", run.result.min_dcf},
                            {"final_train_loss", run.result.final_train_loss()},
                            {"adapter_trainable", run.result.adapter_params.trainable},
                            {"warnings", run.result.warnings}};
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_sweep(const std::string& mode_name, const std::string& config,
              std::optional<std::uint64_t> seed, const std::string& out, std::size_t jobs,
              double positions_alpha_over_r) {
  const SweepMode mode = parse_sweep_mode(mode_name);
  const ExperimentConfig cfg = load_config(config, seed);
  const SweepTable table = run_sweep(mode, cfg, jobs, positions_alpha_over_r);

  std::ostringstream csv;
  write_sweep_csv(csv, table);
  std::cout << csv.str();

  const auto dir = new_run_directory(out, cfg.name + "_sweep_" + std::string(to_string(mode)));
  write_file_atomic(dir / "sweep.csv", csv.str());
  write_json_file(dir / "config.json", to_json(cfg));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const SweepRow& row = table.rows[i];
    nlohmann::json cell = row.result ? to_json(*row.result)
                                     : nlohmann::json{{"config", to_json(row.config)},
                                                      {"status", "error"},
                                                      {"error", row.error}};
    write_json_file(dir / ("cell" + std::to_string(i) + ".json"), cell);
  }
  std::cerr << "sweep written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& path, const DcfParams& params) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  const TrialSet trials = read_trials_csv(in);
  const MetricResult m = evaluate(trials, params);
  std::cout << metric_report(trials, m, params).dump(2) << '\n';
  return kExitOk;
}

std::string top_singular_values(const Matrix& w) {
  const SvdFactors f = svd(w);
  std::ostringstream s;
  s << std::setprecision(6);
  for (std::size_t i = 0; i < std::min(kTopSingularValues, f.sigma.size()); ++i)
    s << (i ? " " : "") << f.sigma[i];
  return s.str();
}

void describe_adapter(const Adapter& a, const std::string& indent) {
  const ParamCount pc = param_count(a);
  std::cout << indent << "tag=" << to_string(a.kind()) << " shape=" << a.rows() << "x" << a.cols();
  if (auto r = a.rank()) std::cout << " r=" << *r;
  if (auto k = a.principal_count()) std::cout << " k=" << *k;
  if (auto alpha = a.alpha()) std::cout << " alpha=" << *alpha;
  std::cout << " trainable=" << pc.trainable << " frozen=" << pc.frozen << '\n';
  const nlohmann::json j = to_json(a);
  for (const auto& [name, m] : j.at("matrices").items())
    std::cout << indent << "  " << name << ": " << m.at("rows") << "x" << m.at("cols") << '\n';
  std::cout << indent << "  top singular values: " << top_singular_values(effective_weight(a))
            << '\n';
}

int cmd_inspect(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  if (j.contains("tag")) {
    describe_adapter(adapter_from_json(j), "");
    return kExitOk;
  }
  const Model m = model_from_json(j);
  const ParamCount pc = m.param_count();
  std::cout << "model d_in=" << m.dims.d_in << " d=" << m.dims.d << " h=" << m.dims.hidden
            << " layers=" << m.dims.layers << " heads=" << m.dims.heads
            << " classes=" << m.dims.classes << '\n';
  std::cout << "params trainable=" << pc.trainable << " frozen=" << pc.frozen << '\n';
  std::cout << "input_proj: " << m.input_proj.shape_string() << '\n';
  std::cout << "classifier: " << m.classifier.shape_string() << '\n';
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const EncoderLayer& layer = m.layers[li];
    std::cout << "layer " << li << '\n';
    for (Projection p : {Projection::kQuery, Projection::kKey, Projection::kValue}) {
      const LinearSlot& slot = layer.slot(p);
      std::cout << "  w" << to_string(p) << ": ";
      if (const Adapter* a = slot.adapter()) {
        std::cout << '\n';
        describe_adapter(*a, "    ");
      } else {
        std::cout << "dense " << slot.weight().shape_string()
                  << " top singular values: " << top_singular_values(slot.weight()) << '\n';
      }
    }
    std::cout << "  wo: " << layer.wo.shape_string() << " ffn1: " << layer.ffn1.shape_string()
              << " ffn2: " << layer.ffn2.shape_string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral low-rank adaptation experiments on synthetic speaker verification"};
  app.require_subcommand(1);

  std::string config;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Pretrain, fine-tune and evaluate one configuration");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override experiment and corpus seed");
  run->add_option("--out", out, "Root directory for run folders");

  std::string mode;
  std::size_t jobs = 1;
  double positions_alpha_over_r = 1.0;
  auto* sweep = app.add_subcommand("sweep", "Run one ablation grid");
  sweep->add_option("--mode", mode, "rank | principal_k | subspace | positions")
      ->required()
      ->check(CLI::IsMember({"rank", "principal_k", "subspace", "positions"}));
  sweep->add_option("--config", config, "Base experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed, "Override experiment and corpus seed");
  sweep->add_option("--out", out, "Root directory for run folders");
  sweep->add_option("--jobs", jobs, "Cells fine-tuned in parallel")->check(CLI::PositiveNumber);
  sweep->add_option("--positions-alpha-over-r", positions_alpha_over_r,
                    "alpha/r used by the positions grid");

  std::string trials_path;
  DcfParams dcf;
  auto* eval = app.add_subcommand("eval", "EER and minDCF of a trial-score CSV");
  eval->add_option("--trials", trials_path, "CSV: enroll_id,test_id,score,is_target")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--p-target", dcf.p_target, "Target prior");
  eval->add_option("--c-miss", dcf.c_miss, "Miss cost");
  eval->add_option("--c-fa", dcf.c_fa, "False-alarm cost");

  std::string checkpoint;
  auto* inspect = app.add_subcommand("inspect", "Describe a model or adapter checkpoint");
  inspect->add_option("--checkpoint", checkpoint, "Checkpoint JSON")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, seed, out);
    if (*sweep) return cmd_sweep(mode, config, seed, out, jobs, positions_alpha_over_r);
    if (*eval) return cmd_eval(trials_path, dcf);
    if (*inspect) return cmd_inspect(checkpoint);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
