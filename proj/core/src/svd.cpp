// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/svd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "spectral/errors.hpp"

namespace spectral {
namespace {

// Column-major working copy: one contiguous vector per column keeps the
// rotations cache friendly.
using Columns = std::vector<std::vector<double>>;

Columns to_columns(const Matrix& a) {
  Columns cols(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) cols[c][r] = a(r, c);
  return cols;
}

void rotate(std::vector<double>& x, std::vector<double>& y, double c, double s) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// Extends `basis` (orthonormal columns, possibly fewer than dim) to a full
// orthonormal basis of R^dim by Gram-Schmidt against the unit vectors, with
// one reorthogonalization pass.
void complete_basis(Columns& basis, std::size_t dim) {
  for (std::size_t e = 0; e < dim && basis.size() < dim; ++e) {
    std::vector<double> cand(dim, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double proj = dot(b, cand);
        for (std::size_t i = 0; i < dim; ++i) cand[i] -= proj * b[i];
      }
    }
    const double nrm = norm2(cand);
    if (nrm < 1e-8) continue;
    for (double& v : cand) v /= nrm;
    basis.push_back(std::move(cand));
  }
}

struct TallSvd {
  Columns left;   // p columns of length p (completed)
  std::vector<double> sigma;
  Columns right;  // q columns of length q
};

// x is p×q with p >= q, stored by columns.
TallSvd jacobi_tall(Columns x, std::size_t p, const JacobiOptions& opt) {
  const std::size_t q = x.size();
  Columns v(q, std::vector<double>(q, 0.0));
  for (std::size_t i = 0; i < q; ++i) v[i][i] = 1.0;

  double residual = 0.0;
  bool converged = q < 2;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    residual = 0.0;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        const double alpha = dot(x[i], x[i]);
        const double beta = dot(x[j], x[j]);
        const double gamma = dot(x[i], x[j]);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, rel);
        if (rel <= opt.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(x[i], x[j], c, s);
        rotate(v[i], v[j], c, s);
      }
    }
    converged = residual <= opt.tolerance;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "svd did not converge after " << opt.max_sweeps
        << " sweeps; residual off-diagonal norm " << residual;
    throw NumericError(msg.str());
  }

  std::vector<double> norms(q);
  for (std::size_t j = 0; j < q; ++j) norms[j] = norm2(x[j]);
  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const double smax = q == 0 ? 0.0 : norms[order[0]];
  const double cutoff =
      smax * static_cast<double>(std::max(p, q)) * std::numeric_limits<double>::epsilon();

  TallSvd out;
  out.sigma.reserve(q);
  out.right.reserve(q);
  Columns left;
  std::vector<bool> needs_completion(q, false);
  for (std::size_t idx = 0; idx < q; ++idx) {
    const std::size_t j = order[idx];
    out.sigma.push_back(norms[j]);
    out.right.push_back(v[j]);
    if (norms[j] > cutoff && norms[j] > 0.0) {
      std::vector<double> col = x[j];
      for (double& e : col) e /= norms[j];
      left.push_back(std::move(col));
    } else {
      needs_completion[idx] = true;
      left.emplace_back();
    }
  }

  // Columns for (numerically) zero singular values and the trailing p - q
  // columns are filled from the orthogonal complement of the known ones.
  Columns known;
  for (std::size_t idx = 0; idx < q; ++idx)
    if (!needs_completion[idx]) known.push_back(left[idx]);
  const std::size_t n_known = known.size();
  complete_basis(known, p);
  std::size_t next = n_known;
  for (std::size_t idx = 0; idx < q; ++idx)
    if (needs_completion[idx]) left[idx] = known[next++];
  for (; next < known.size(); ++next) left.push_back(known[next]);
  out.left = std::move(left);
  return out;
}

// Index of the largest-magnitude entry, lowest index on ties.
std::size_t dominant_index(const std::vector<double>& col) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < col.size(); ++i)
    if (std::abs(col[i]) > std::abs(col[best])) best = i;
  return best;
}

void negate(std::vector<double>& col) {
  for (double& e : col) e = -e;
}

Matrix from_columns(const Columns& cols, std::size_t rows) {
  Matrix m(rows, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows; ++r) m(r, c) = cols[c][r];
  return m;
}

}  // namespace

SvdFactors svd(const Matrix& w, const JacobiOptions& options) {
  if (w.rows() == 0 || w.cols() == 0) throw ShapeError("svd of empty matrix " + w.shape_string());
  require_finite(w, "svd input");

  const bool transposed = w.rows() < w.cols();
  const Matrix& tall = transposed ? w.transpose() : w;
  TallSvd t = jacobi_tall(to_columns(tall), tall.rows(), options);

  Columns u_cols = transposed ? std::move(t.right) : std::move(t.left);
  Columns v_cols = transposed ? std::move(t.left) : std::move(t.right);
  const std::size_t rank_slots = t.sigma.size();

  for (std::size_t i = 0; i < u_cols.size(); ++i) {
    if (u_cols[i][dominant_index(u_cols[i])] < 0.0) {
      negate(u_cols[i]);
      if (i < rank_slots) negate(v_cols[i]);
    }
  }
  for (std::size_t i = rank_slots; i < v_cols.size(); ++i)
    if (v_cols[i][dominant_index(v_cols[i])] < 0.0) negate(v_cols[i]);

  SvdFactors f;
  f.u = from_columns(u_cols, w.rows());
  f.v = from_columns(v_cols, w.cols());
  f.sigma = std::move(t.sigma);
  return f;
}

TruncatedSvd truncate_svd(const SvdFactors& f, std::size_t k) {
  if (k < 1 || k > f.sigma.size()) {
    throw RangeError("truncate_svd: k=" + std::to_string(k) + " outside [1, " +
                     std::to_string(f.sigma.size()) + "]");
  }
  TruncatedSvd t;
  t.k = k;
  t.u_p = f.u.left_columns(k);
  t.v_p = f.v.left_columns(k);
  t.sigma_p.assign(f.sigma.begin(), f.sigma.begin() + static_cast<std::ptrdiff_t>(k));
  return t;
}

Matrix reconstruct(const TruncatedSvd& t) {
  return matmul_nt(scale_columns(t.u_p, t.sigma_p), t.v_p);
}

Matrix reconstruct(const SvdFactors& f) { return reconstruct(truncate_svd(f, f.sigma.size())); }

std::uint64_t content_hash(const Matrix& w) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(w.rows());
  mix(w.cols());
  for (double v : w.data()) mix(std::bit_cast<std::uint64_t>(v));
  return h;
}

std::shared_ptr<const SvdFactors> SvdCache::get(const Matrix& w) {
  const std::uint64_t h = content_hash(w);
  {
    std::lock_guard lock(mutex_);
    auto [lo, hi] = entries_.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      if (it->second.key == w) {
        ++hits_;
        return it->second.factors;
      }
    }
  }
  // Decompose outside the lock; a racing thread may do the same work, the
  // first insert wins and both results are identical anyway.
  auto factors = std::make_shared<const SvdFactors>(svd(w));
  std::lock_guard lock(mutex_);
  auto [lo, hi] = entries_.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    if (it->second.key == w) {
      ++hits_;
      return it->second.factors;
    }
  }
  ++misses_;
  entries_.emplace(h, Entry{w, factors});
  return factors;
}

std::size_t SvdCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t SvdCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t SvdCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

void SvdCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  hits_ = misses_ = 0;
}

SvdCache& SvdCache::global() {
  static SvdCache cache;
  return cache;
}

}  // namespace spectral
