// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace spectral {

struct Trial {
  double score = 0.0;
  bool is_target = false;
  std::string enroll_id;
  std::string test_id;
};

/// Scored verification trials. Needs at least one target and one nontarget;
/// scores must be finite.
class TrialSet {
 public:
  TrialSet() = default;
  explicit TrialSet(std::vector<Trial> trials);

  std::span<const Trial> trials() const noexcept { return trials_; }
  std::size_t n_target() const noexcept { return n_target_; }
  std::size_t n_nontarget() const noexcept { return trials_.size() - n_target_; }

  /// Throws ConfigError unless both classes are present and all scores finite.
  void validate() const;

 private:
  std::vector<Trial> trials_;
  std::size_t n_target_ = 0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

struct DcfResult {
  double min_dcf = 0.0;
  /// +inf when the reject-all sentinel wins, -inf for accept-all.
  double threshold = 0.0;
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void validate() const;
};

struct MetricResult {
  double eer = 0.0;
  double eer_threshold = 0.0;
  double min_dcf = 0.0;
  double dcf_threshold = 0.0;
};

/// Cosine similarity; NumericError if either vector has zero norm.
double cosine_score(std::span<const double> a, std::span<const double> b);

/// Equal error rate with accept rule score >= threshold. Every distinct score
/// is an operating point, plus reject-all; the FAR/FRR crossing is linearly
/// interpolated between the bracketing points.
EerResult compute_eer(const TrialSet& trials);

/// Minimum normalized detection cost over the same thresholds plus the
/// accept-all and reject-all sentinels. Normalizer: min(c_miss·p, c_fa·(1-p)).
DcfResult compute_min_dcf(const TrialSet& trials, const DcfParams& params = {});

MetricResult evaluate(const TrialSet& trials, const DcfParams& params = {});

/// Lines `enroll_id,test_id,score,is_target`, no header.
void write_trials_csv(std::ostream& out, const TrialSet& trials);
/// Accepts an optional header line starting with "enroll_id". ConfigError on
/// malformed lines, with the line number.
TrialSet read_trials_csv(std::istream& in);

/// {"eer", "min_dcf", "p_target", "c_miss", "c_fa", "n_target", "n_nontarget"}
nlohmann::json metric_report(const TrialSet& trials, const MetricResult& m, const DcfParams& p);

}  // namespace spectral
