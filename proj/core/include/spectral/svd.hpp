// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "spectral/matrix.hpp"

namespace spectral {

/// Full decomposition W = U·diag(sigma)·Vᵀ with U m×m, V n×n and
/// min(m, n) singular values in descending order.
///
/// Each left singular vector is oriented so that its largest-magnitude entry
/// is positive (lowest row index wins ties); the paired right vector follows.
/// Columns of V beyond min(m, n) use the same rule on V itself.
struct SvdFactors {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;

  std::size_t rows() const noexcept { return u.rows(); }
  std::size_t cols() const noexcept { return v.rows(); }
};

/// Top-k slice of an SvdFactors: U_p m×k, sigma_p (k), V_p n×k.
struct TruncatedSvd {
  std::size_t k = 0;
  Matrix u_p;
  std::vector<double> sigma_p;
  Matrix v_p;

  std::size_t rows() const noexcept { return u_p.rows(); }
  std::size_t cols() const noexcept { return v_p.rows(); }
};

struct JacobiOptions {
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

/// One-sided Jacobi SVD. Throws NumericError for non-finite input or when the
/// relative off-diagonal measure is still above tolerance after max_sweeps.
SvdFactors svd(const Matrix& w, const JacobiOptions& options = {});

/// Keeps the first k singular triplets; RangeError unless 1 <= k <= len(sigma).
TruncatedSvd truncate_svd(const SvdFactors& f, std::size_t k);

/// U_p·diag(sigma_p)·V_pᵀ.
Matrix reconstruct(const TruncatedSvd& t);
Matrix reconstruct(const SvdFactors& f);

/// Memoizes svd() by matrix content so a weight is decomposed once per process
/// no matter how many adapters are built on it. Safe for concurrent use.
class SvdCache {
 public:
  std::shared_ptr<const SvdFactors> get(const Matrix& w);

  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;
  void clear();

  static SvdCache& global();

 private:
  struct Entry {
    Matrix key;
    std::shared_ptr<const SvdFactors> factors;
  };

  mutable std::mutex mutex_;
  std::unordered_multimap<std::uint64_t, Entry> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// FNV-1a over the shape and the raw bytes of the entries.
std::uint64_t content_hash(const Matrix& w) noexcept;

}  // namespace spectral
