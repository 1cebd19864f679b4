// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "spectral/errors.hpp"
#include "spectral/matrix.hpp"

namespace spectral {
namespace {

// Miss and false-alarm counts at each distinct score used as threshold,
// ascending, followed by the reject-all point.
struct OperatingPoints {
  std::vector<double> thresholds;  // last entry is +inf
  std::vector<std::size_t> misses;
  std::vector<std::size_t> false_alarms;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

OperatingPoints operating_points(const TrialSet& set) {
  set.validate();
  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(set.trials().size());
  for (const Trial& t : set.trials()) sorted.emplace_back(t.score, t.is_target);
  std::sort(sorted.begin(), sorted.end());

  OperatingPoints op;
  op.n_target = set.n_target();
  op.n_nontarget = set.n_nontarget();
  // Threshold at sorted[i].score rejects exactly the trials strictly below it.
  std::size_t below_target = 0;
  std::size_t below_nontarget = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double score = sorted[i].first;
    op.thresholds.push_back(score);
    op.misses.push_back(below_target);
    op.false_alarms.push_back(op.n_nontarget - below_nontarget);
    for (; i < sorted.size() && sorted[i].first == score; ++i)
      (sorted[i].second ? below_target : below_nontarget)++;
  }
  op.thresholds.push_back(std::numeric_limits<double>::infinity());
  op.misses.push_back(op.n_target);
  op.false_alarms.push_back(0);
  return op;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrialSet::TrialSet(std::vector<Trial> trials) : trials_(std::move(trials)) {
  n_target_ = static_cast<std::size_t>(
      std::count_if(trials_.begin(), trials_.end(), [](const Trial& t) { return t.is_target; }));
}

void TrialSet::validate() const {
  if (n_target() == 0 || n_nontarget() == 0) {
    throw ConfigError("trial set needs at least one target and one nontarget (got " +
                      std::to_string(n_target()) + " / " + std::to_string(n_nontarget()) + ")");
  }
  for (const Trial& t : trials_)
    if (!std::isfinite(t.score)) throw ConfigError("trial set contains a non-finite score");
}

void DcfParams::validate() const {
  if (!(p_target > 0.0 && p_target < 1.0)) throw ConfigError("p_target must lie in (0, 1)");
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) throw ConfigError("detection costs must be positive");
}

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_score: vectors differ in length");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine_score: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

EerResult compute_eer(const TrialSet& trials) {
  const OperatingPoints op = operating_points(trials);
  const double nt = static_cast<double>(op.n_target);
  const double nn = static_cast<double>(op.n_nontarget);
  // FAR - FRR falls from +1 at the lowest threshold to -1 at reject-all.
  double prev_far = 0.0;
  double prev_frr = 0.0;
  for (std::size_t i = 0; i < op.thresholds.size(); ++i) {
    const double far = static_cast<double>(op.false_alarms[i]) / nn;
    const double frr = static_cast<double>(op.misses[i]) / nt;
    const double diff = far - frr;
    if (diff == 0.0) return {far, op.thresholds[i]};
    if (diff < 0.0) {
      const double prev_diff = prev_far - prev_frr;
      const double w = prev_diff / (prev_diff - diff);
      const double eer = prev_frr + w * (frr - prev_frr);
      const double lo = op.thresholds[i - 1];
      const double hi = op.thresholds[i];
      const double threshold = std::isinf(hi) ? lo : lo + w * (hi - lo);
      return {eer, threshold};
    }
    prev_far = far;
    prev_frr = frr;
  }
  return {prev_frr, op.thresholds.back()};
}

DcfResult compute_min_dcf(const TrialSet& trials, const DcfParams& params) {
  params.validate();
  const OperatingPoints op = operating_points(trials);
  const double nt = static_cast<double>(op.n_target);
  const double nn = static_cast<double>(op.n_nontarget);
  const double norm = std::min(params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target));
  auto cost = [&](double p_miss, double p_fa) {
    return (params.c_miss * p_miss * params.p_target + params.c_fa * p_fa * (1.0 - params.p_target)) /
           norm;
  };
  DcfResult best{cost(0.0, 1.0), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < op.thresholds.size(); ++i) {
    const double c = cost(static_cast<double>(op.misses[i]) / nt,
                          static_cast<double>(op.false_alarms[i]) / nn);
    if (c < best.min_dcf) best = {c, op.thresholds[i]};
  }
  return best;
}

MetricResult evaluate(const TrialSet& trials, const DcfParams& params) {
  const EerResult e = compute_eer(trials);
  const DcfResult d = compute_min_dcf(trials, params);
  return {e.eer, e.threshold, d.min_dcf, d.threshold};
}

void write_trials_csv(std::ostream& out, const TrialSet& trials) {
  for (const Trial& t : trials.trials()) {
    out << t.enroll_id << ',' << t.test_id << ',' << format_double(t.score) << ','
        << (t.is_target ? 1 : 0) << '\n';
  }
}

TrialSet read_trials_csv(std::istream& in) {
  std::vector<Trial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("enroll_id", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 4) {
      throw ConfigError("trials line " + std::to_string(line_no) + ": expected 4 fields, got " +
                        std::to_string(fields.size()));
    }
    Trial t;
    t.enroll_id = fields[0];
    t.test_id = fields[1];
    try {
      std::size_t used = 0;
      t.score = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("trials line " + std::to_string(line_no) + ": bad score '" + fields[2] +
                        "'");
    }
    if (fields[3] == "1") {
      t.is_target = true;
    } else if (fields[3] == "0") {
      t.is_target = false;
    } else {
      throw ConfigError("trials line " + std::to_string(line_no) + ": is_target must be 0 or 1");
    }
    trials.push_back(std::move(t));
  }
  TrialSet set(std::move(trials));
  set.validate();
  return set;
}

nlohmann::json metric_report(const TrialSet& trials, const MetricResult& m, const DcfParams& p) {
  return {{"eer", m.eer},           {"min_dcf", m.min_dcf},
          {"p_target", p.p_target}, {"c_miss", p.c_miss},
          {"c_fa", p.c_fa},         {"n_target", trials.n_target()},
          {"n_nontarget", trials.n_nontarget()}};
}

}  // namespace spectral
