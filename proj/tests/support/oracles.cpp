// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spectral::oracle {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) acc += a(i, t) * b(t, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix naive_transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix naive_reconstruct(const Matrix& u, std::span<const double> sigma, const Matrix& v,
                         std::size_t k) {
  Matrix out(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < v.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += u(i, t) * sigma[t] * v(j, t);
      out(i, j) = acc;
    }
  }
  return out;
}

double naive_frobenius(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

double naive_orthonormality_error(const Matrix& a, std::size_t k) {
  double worst = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = 0; q < k; ++q) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, p) * a(i, q);
      worst = std::max(worst, std::abs(acc - (p == q ? 1.0 : 0.0)));
    }
  }
  return worst;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  if (scale < floor) return std::sqrt(diff);
  return std::sqrt(diff) / scale;
}

double relative_error(const Matrix& a, const Matrix& b, double floor) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  return relative_error(a.data(), b.data(), floor);
}

Matrix numeric_gradient(Matrix& param, const std::function<double()>& loss, double h) {
  Matrix grad(param.rows(), param.cols());
  for (std::size_t i = 0; i < param.rows(); ++i) {
    for (std::size_t j = 0; j < param.cols(); ++j) {
      const double saved = param(i, j);
      param(i, j) = saved + h;
      const double up = loss();
      param(i, j) = saved - h;
      const double down = loss();
      param(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

namespace {

struct Counts {
  double far;
  double frr;
};

// Recounts every trial against one threshold.
Counts rates_at(const ScoredTrials& trials, double threshold) {
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  for (const auto& [score, target] : trials) {
    if (target) {
      ++n_target;
      if (score < threshold) ++misses;
    } else {
      ++n_nontarget;
      if (score >= threshold) ++false_alarms;
    }
  }
  return {static_cast<double>(false_alarms) / static_cast<double>(n_nontarget),
          static_cast<double>(misses) / static_cast<double>(n_target)};
}

std::vector<double> candidate_thresholds(const ScoredTrials& trials) {
  std::vector<double> out;
  for (const auto& t : trials) out.push_back(t.first);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace

double brute_force_eer(const ScoredTrials& trials) {
  const std::vector<double> thresholds = candidate_thresholds(trials);
  Counts prev{0.0, 0.0};
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const Counts c = rates_at(trials, thresholds[i]);
    const double diff = c.far - c.frr;
    if (diff == 0.0) return c.far;
    if (diff < 0.0) {
      const double prev_diff = prev.far - prev.frr;
      const double w = prev_diff / (prev_diff - diff);
      return prev.frr + w * (c.frr - prev.frr);
    }
    prev = c;
  }
  return prev.frr;
}

double brute_force_min_dcf(const ScoredTrials& trials, double p_target, double c_miss, double c_fa) {
  std::vector<double> thresholds = candidate_thresholds(trials);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  const double norm = std::min(c_miss * p_target, c_fa * (1.0 - p_target));
  double best = std::numeric_limits<double>::infinity();
  for (double t : thresholds) {
    const Counts c = rates_at(trials, t);
    best = std::min(best, (c_miss * c.frr * p_target + c_fa * c.far * (1.0 - p_target)) / norm);
  }
  return best;
}

Matrix straight_line_attention(const Matrix& x, const Matrix& wq, const Matrix& wk,
                               const Matrix& wv, const Matrix& wo) {
  const Matrix q = naive_matmul(x, naive_transpose(wq));
  const Matrix k = naive_matmul(x, naive_transpose(wk));
  const Matrix v = naive_matmul(x, naive_transpose(wv));
  const std::size_t t_len = x.rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix weights(t_len, t_len);
  for (std::size_t i = 0; i < t_len; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < t_len; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
      weights(i, j) = s * inv_sqrt_d;
      row_max = std::max(row_max, weights(i, j));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < t_len; ++j) {
      weights(i, j) = std::exp(weights(i, j) - row_max);
      total += weights(i, j);
    }
    for (std::size_t j = 0; j < t_len; ++j) weights(i, j) /= total;
  }
  Matrix out = naive_matmul(naive_matmul(weights, v), naive_transpose(wo));
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += x(i, j);
  return out;
}

double plain_softmax_loss(std::span<const double> embedding, std::size_t label,
                          const Matrix& classifier, double scale) {
  double en = 0.0;
  for (double e : embedding) en += e * e;
  en = std::sqrt(en);
  std::vector<double> logits(classifier.rows());
  for (std::size_t j = 0; j < classifier.rows(); ++j) {
    double dotp = 0.0;
    double wn = 0.0;
    for (std::size_t c = 0; c < embedding.size(); ++c) {
      dotp += classifier(j, c) * embedding[c];
      wn += classifier(j, c) * classifier(j, c);
    }
    logits[j] = scale * dotp / (en * std::sqrt(wn));
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - top);
  return -(logits[label] - top - std::log(total));
}

}  // namespace spectral::oracle
