// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "spectral/diagnostics.hpp"
#include "spectral/errors.hpp"
#include "spectral/optimizer.hpp"
#include "spectral/serialization.hpp"

namespace spectral {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Distinct streams derived from the experiment seed.
constexpr std::uint64_t kClassifierStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kFinetuneStream = 0xbf58476d1ce4e5b9ULL;
constexpr std::uint64_t kAdapterStream = 0x94d049bb133111ebULL;

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const json& s = j.at(key);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return s;
}

Matrix random_classifier(std::size_t classes, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  Matrix c(classes, d);
  for (double& v : c.data()) v = normal(rng);
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  corpus.validate();
  if (model.d == 0 || model.hidden == 0 || model.heads == 0) {
    throw ConfigError("model dims d, h and heads must be positive");
  }
  if (model.d % model.heads != 0) throw ConfigError("model d must be divisible by heads");
  if (adapter.rank < 1) throw ConfigError("adapter rank r must be at least 1");
  if (adapter.principal_count < 1) throw ConfigError("adapter k must be at least 1");
  if (!(adapter.resolved_alpha() > 0.0)) throw ConfigError("adapter alpha must be positive");
  if (positions.empty()) throw ConfigError("positions must name at least one of q, k, v");
  if (std::set<Projection>(positions.begin(), positions.end()).size() != positions.size()) {
    throw ConfigError("positions contain duplicates");
  }
  if (!(train.lr > 0.0) || !(train.pretrain_lr > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (train.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  aam.validate();
  metric.validate();
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  corpus.seed = s;
}

json to_json(const ExperimentConfig& c) {
  json positions = json::array();
  for (Projection p : c.positions) positions.push_back(std::string(to_string(p)));
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"corpus",
       {{"n_pretrain_speakers", c.corpus.n_pretrain_speakers},
        {"n_finetune_speakers", c.corpus.n_finetune_speakers},
        {"utterances_per_speaker", c.corpus.utterances_per_speaker},
        {"enroll_per_speaker", c.corpus.enroll_per_speaker},
        {"test_per_speaker", c.corpus.test_per_speaker},
        {"frames_per_utterance", c.corpus.frames_per_utterance},
        {"d_in", c.corpus.d_in},
        {"speaker_spread", c.corpus.speaker_spread},
        {"frame_noise", c.corpus.frame_noise},
        {"session_spread", c.corpus.session_spread},
        {"nuisance_dims", c.corpus.nuisance_dims},
        {"seed", c.corpus.seed}}},
      {"model", {{"d", c.model.d}, {"h", c.model.hidden}, {"layers", c.model.layers},
                 {"heads", c.model.heads}}},
      {"adapter",
       {{"tag", std::string(to_string(c.adapter.kind))},
        {"r", c.adapter.rank},
        {"k", c.adapter.principal_count},
        {"alpha", c.adapter.alpha ? json(*c.adapter.alpha) : json(nullptr)},
        {"alpha_over_r", c.adapter.alpha_over_r}}},
      {"positions", positions},
      {"train",
       {{"pretrain_epochs", c.train.pretrain_epochs},
        {"pretrain_lr", c.train.pretrain_lr},
        {"plateau_tolerance", c.train.plateau_tolerance},
        {"plateau_window", c.train.plateau_window},
        {"epochs", c.train.epochs},
        {"lr", c.train.lr},
        {"batch_size", c.train.batch_size}}},
      {"aam", {{"margin", c.aam.margin}, {"scale", c.aam.scale}}},
      {"metric", {{"p_target", c.metric.p_target}, {"c_miss", c.metric.c_miss},
                  {"c_fa", c.metric.c_fa}}},
  };
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  read_field(j, "name", c.name);
  read_field(j, "seed", c.seed);
  c.corpus.seed = c.seed;

  const json& cj = section(j, "corpus");
  read_field(cj, "n_pretrain_speakers", c.corpus.n_pretrain_speakers);
  read_field(cj, "n_finetune_speakers", c.corpus.n_finetune_speakers);
  read_field(cj, "utterances_per_speaker", c.corpus.utterances_per_speaker);
  read_field(cj, "enroll_per_speaker", c.corpus.enroll_per_speaker);
  read_field(cj, "test_per_speaker", c.corpus.test_per_speaker);
  read_field(cj, "frames_per_utterance", c.corpus.frames_per_utterance);
  read_field(cj, "d_in", c.corpus.d_in);
  read_field(cj, "speaker_spread", c.corpus.speaker_spread);
  read_field(cj, "frame_noise", c.corpus.frame_noise);
  read_field(cj, "session_spread", c.corpus.session_spread);
  read_field(cj, "nuisance_dims", c.corpus.nuisance_dims);
  read_field(cj, "seed", c.corpus.seed);

  const json& mj = section(j, "model");
  read_field(mj, "d", c.model.d);
  read_field(mj, "h", c.model.hidden);
  read_field(mj, "layers", c.model.layers);
  read_field(mj, "heads", c.model.heads);
  c.model.d_in = c.corpus.d_in;

  const json& aj = section(j, "adapter");
  std::string tag(to_string(c.adapter.kind));
  read_field(aj, "tag", tag);
  c.adapter.kind = parse_adapter_kind(tag);
  read_field(aj, "r", c.adapter.rank);
  read_field(aj, "k", c.adapter.principal_count);
  read_field(aj, "alpha_over_r", c.adapter.alpha_over_r);
  if (aj.contains("alpha") && !aj.at("alpha").is_null()) {
    double alpha = 0.0;
    read_field(aj, "alpha", alpha);
    c.adapter.alpha = alpha;
  }

  if (j.contains("positions")) {
    std::vector<std::string> names;
    read_field(j, "positions", names);
    c.positions.clear();
    for (const std::string& n : names) c.positions.push_back(parse_projection(n));
  }

  const json& tj = section(j, "train");
  read_field(tj, "pretrain_epochs", c.train.pretrain_epochs);
  read_field(tj, "pretrain_lr", c.train.pretrain_lr);
  read_field(tj, "plateau_tolerance", c.train.plateau_tolerance);
  read_field(tj, "plateau_window", c.train.plateau_window);
  read_field(tj, "epochs", c.train.epochs);
  read_field(tj, "lr", c.train.lr);
  read_field(tj, "batch_size", c.train.batch_size);

  const json& lj = section(j, "aam");
  read_field(lj, "margin", c.aam.margin);
  read_field(lj, "scale", c.aam.scale);

  const json& dj = section(j, "metric");
  read_field(dj, "p_target", c.metric.p_target);
  read_field(dj, "c_miss", c.metric.c_miss);
  read_field(dj, "c_fa", c.metric.c_fa);

  c.validate();
  return c;
}

json to_json(const RunResult& r) {
  return {{"config", to_json(r.config)},
          {"status", r.status},
          {"error", r.error},
          {"pretrain_losses", r.pretrain_losses},
          {"train_losses", r.train_losses},
          {"adapter_trainable", r.adapter_params.trainable},
          {"adapter_frozen", r.adapter_params.frozen},
          {"model_trainable", r.model_params.trainable},
          {"model_frozen", r.model_params.frozen},
          {"effective_k", r.effective_k},
          {"alpha", r.alpha},
          {"eer", r.eer},
          {"eer_threshold", r.eer_threshold},
          {"min_dcf", r.min_dcf},
          {"p_target", r.config.metric.p_target},
          {"c_miss", r.config.metric.c_miss},
          {"c_fa", r.config.metric.c_fa},
          {"n_target", r.n_target},
          {"n_nontarget", r.n_nontarget},
          {"wall_seconds", r.wall_seconds},
          {"seed", r.seed},
          {"warnings", r.warnings}};
}

RunResult run_result_from_json(const json& j) {
  RunResult r;
  r.config = experiment_config_from_json(j.at("config"));
  read_field(j, "status", r.status);
  read_field(j, "error", r.error);
  read_field(j, "pretrain_losses", r.pretrain_losses);
  read_field(j, "train_losses", r.train_losses);
  read_field(j, "adapter_trainable", r.adapter_params.trainable);
  read_field(j, "adapter_frozen", r.adapter_params.frozen);
  read_field(j, "model_trainable", r.model_params.trainable);
  read_field(j, "model_frozen", r.model_params.frozen);
  read_field(j, "effective_k", r.effective_k);
  read_field(j, "alpha", r.alpha);
  read_field(j, "eer", r.eer);
  read_field(j, "eer_threshold", r.eer_threshold);
  read_field(j, "min_dcf", r.min_dcf);
  read_field(j, "n_target", r.n_target);
  read_field(j, "n_nontarget", r.n_nontarget);
  read_field(j, "wall_seconds", r.wall_seconds);
  read_field(j, "seed", r.seed);
  read_field(j, "warnings", r.warnings);
  return r;
}

std::vector<double> train_model(Model& model, const std::vector<Utterance>& data,
                                std::size_t epochs, double lr, std::size_t batch_size,
                                const AamConfig& aam, std::uint64_t seed,
                                std::size_t plateau_window, double tolerance) {
  std::vector<double> losses;
  if (data.empty() || epochs == 0) return losses;
  AdamState state;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  model.refresh();

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        GradientSet batch;
        for (std::size_t i = start; i < stop; ++i) {
          const Utterance& u = data[order[i]];
          ForwardResult fwd = model_forward(model, u.frames);
          AamResult loss = aam_loss(fwd.embedding, u.speaker, model.classifier, aam);
          GradientSet g = model_backward(model, fwd.cache, loss.grad_embedding);
          if (model.classifier_trainable) g.push_back({"classifier", std::move(loss.grad_classifier)});
          accumulate(batch, g);
          epoch_loss += loss.loss;
        }
        scale(batch, 1.0 / static_cast<double>(stop - start));
        const auto params = model.trainable_params();
        if (!params.empty()) {
          optimizer_step(params, batch, state, lr);
          model.refresh();
        }
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + "; training diverged at epoch " +
                         std::to_string(epoch) + " (seed " + std::to_string(seed) + ")");
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (seed " +
                         std::to_string(seed) + ")");
    }
    losses.push_back(epoch_loss);
    if (plateau_window > 0 && losses.size() > plateau_window &&
        losses[losses.size() - 1 - plateau_window] - losses.back() < tolerance) {
      break;
    }
  }
  return losses;
}

Model pretrain(const ExperimentConfig& cfg, const Corpus& corpus, std::vector<double>* losses) {
  ModelDims dims = cfg.model;
  dims.d_in = cfg.corpus.d_in;
  dims.classes = corpus.n_pretrain_speakers;
  Model model = Model::random(dims, cfg.seed);
  model.dense_trainable = true;
  model.classifier_trainable = true;
  auto history = train_model(model, corpus.pretrain, cfg.train.pretrain_epochs,
                             cfg.train.pretrain_lr, cfg.train.batch_size, cfg.aam, cfg.seed,
                             cfg.train.plateau_window, cfg.train.plateau_tolerance);
  model.dense_trainable = false;
  if (losses) *losses = std::move(history);
  return model;
}

void attach_adapters(Model& model, const AdapterConfig& adapter,
                     const std::vector<Projection>& positions, std::uint64_t seed) {
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    for (Projection p : positions) {
      LinearSlot& slot = model.layers[li].slot(p);
      const Matrix* w = slot.dense();
      if (w == nullptr) {
        throw ConfigError("layer " + std::to_string(li) + " slot " + std::string(to_string(p)) +
                          " already carries an adapter");
      }
      AdapterSpec spec;
      spec.kind = adapter.kind;
      spec.rank = adapter.rank;
      spec.alpha = adapter.resolved_alpha();
      const std::size_t limit = std::min(w->rows(), w->cols());
      spec.principal_count = adapter.principal_count;
      if (uses_truncation(adapter.kind) && spec.principal_count > limit) {
        diag::warn("k=" + std::to_string(adapter.principal_count) + " clamped to min(m, n)=" +
                   std::to_string(limit));
        spec.principal_count = limit;
      }
      spec.seed = seed ^ (kAdapterStream * (3 * li + static_cast<std::size_t>(p) + 1));
      slot = LinearSlot(init_adapter(*w, spec));
    }
  }
}

std::vector<std::vector<double>> embed_all(const Model& model,
                                           const std::vector<Utterance>& utterances) {
  std::vector<std::vector<double>> out;
  out.reserve(utterances.size());
  for (const Utterance& u : utterances) out.push_back(model_forward(model, u.frames).embedding);
  return out;
}

TrialSet score_trials(const Model& model, const Corpus& corpus) {
  const auto enroll = embed_all(model, corpus.enroll);
  const auto test = embed_all(model, corpus.test);
  std::vector<Trial> trials;
  trials.reserve(corpus.trials.size());
  for (const TrialPair& p : corpus.trials) {
    trials.push_back({cosine_score(enroll[p.enroll], test[p.test]), p.is_target,
                      corpus.enroll[p.enroll].id, corpus.test[p.test].id});
  }
  return TrialSet(std::move(trials));
}

FinetuneOutput finetune(const Model& pretrained, const ExperimentConfig& cfg,
                        const Corpus& corpus) {
  cfg.validate();
  const auto start = Clock::now();
  Model model = pretrained;
  model.dense_trainable = false;
  attach_adapters(model, cfg.adapter, cfg.positions, cfg.seed);
  model.dims.classes = corpus.n_finetune_speakers;
  model.classifier = random_classifier(corpus.n_finetune_speakers, model.dims.d,
                                       cfg.seed ^ kClassifierStream);
  model.classifier_trainable = true;

  RunResult result;
  result.config = cfg;
  result.seed = cfg.seed;
  result.alpha = has_trainable_delta(cfg.adapter.kind) ? cfg.adapter.resolved_alpha() : 0.0;
  result.train_losses = train_model(model, corpus.enroll, cfg.train.epochs, cfg.train.lr,
                                    cfg.train.batch_size, cfg.aam, cfg.seed ^ kFinetuneStream);

  for (const EncoderLayer& layer : model.layers) {
    for (const LinearSlot* slot : {&layer.wq, &layer.wk, &layer.wv}) {
      if (const Adapter* a = slot->adapter()) {
        const ParamCount c = param_count(*a);
        result.adapter_params.trainable += c.trainable;
        result.adapter_params.frozen += c.frozen;
        if (auto k = a->principal_count()) result.effective_k = *k;
      }
    }
  }
  result.model_params = model.param_count();

  TrialSet trials = score_trials(model, corpus);
  const MetricResult m = evaluate(trials, cfg.metric);
  result.eer = m.eer;
  result.eer_threshold = m.eer_threshold;
  result.min_dcf = m.min_dcf;
  result.n_target = trials.n_target();
  result.n_nontarget = trials.n_nontarget();
  result.warnings = diag::take_warnings();
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return {std::move(model), std::move(result), std::move(trials)};
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const Corpus corpus = generate_corpus(cfg.corpus);
  std::vector<double> pretrain_losses;
  const Model pretrained = pretrain(cfg, corpus, &pretrain_losses);
  FinetuneOutput ft = finetune(pretrained, cfg, corpus);
  ft.result.pretrain_losses = std::move(pretrain_losses);
  ft.result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return {std::move(ft.result), std::move(ft.trials), std::move(ft.model)};
}

void save_run(const std::filesystem::path& dir, const RunArtifacts& run) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "config.json", to_json(run.result.config));
  write_json_file(dir / "result.json", to_json(run.result));
  std::ostringstream csv;
  write_trials_csv(csv, run.trials);
  write_file_atomic(dir / "trials.csv", csv.str());
  write_json_file(dir / "checkpoint.json", to_json(run.model));
}

std::filesystem::path new_run_directory(const std::filesystem::path& root,
                                        const std::string& name) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  std::filesystem::path dir = root / (std::string(stamp) + "_" + name);
  for (int suffix = 1; std::filesystem::exists(dir); ++suffix)
    dir = root / (std::string(stamp) + "_" + name + "_" + std::to_string(suffix));
  return dir;
}

}  // namespace spectral
