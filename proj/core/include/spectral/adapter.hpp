// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spectral/matrix.hpp"
#include "spectral/svd.hpp"

namespace spectral {

enum class AdapterKind {
  kLora,
  kDora,
  kSpectral,
  kSpectralPlusMinor,
  kTruncatedFrozen,
  kFullFrozen,
};

/// Canonical lower-case names: lora, dora, spectral, spectral_plus_minor,
/// truncated_frozen, full_frozen.
std::string_view to_string(AdapterKind kind) noexcept;
/// ConfigError on an unknown name.
AdapterKind parse_adapter_kind(std::string_view name);
bool has_trainable_delta(AdapterKind kind) noexcept;
bool uses_truncation(AdapterKind kind) noexcept;

/// Scaled low-rank update (alpha / rank)·B·A with B p×r and A r×q.
struct LowRankDelta {
  Matrix b;
  Matrix a;
  std::size_t rank = 0;
  double alpha = 0.0;

  double scale() const noexcept { return alpha / static_cast<double>(rank); }
  Matrix product() const { return matmul(b, a) * scale(); }
};

/// W0 + delta.
struct LoraAdapter {
  Matrix w0;
  LowRankDelta delta;
};

/// Column j of the effective weight is magnitude[j]·D[:, j] / ‖D[:, j]‖ with
/// D = W0 + delta. `magnitude` is a 1×n row.
struct DoraAdapter {
  Matrix w0;
  LowRankDelta delta;
  Matrix magnitude;
};

/// [U_p + delta_u]·diag(sigma_p)·[V_p + delta_v]ᵀ over a frozen truncated SVD.
/// Singular values stay frozen; only the four delta factors train.
struct SpectralAdapter {
  TruncatedSvd base;
  LowRankDelta delta_u;  // m×r, r×k
  LowRankDelta delta_v;  // n×r, r×k
};

/// Spectral adapter plus the frozen minor part W - U_p·Σ_p·V_pᵀ.
struct SpectralPlusMinorAdapter {
  SpectralAdapter spectral;
  Matrix minor;
};

/// Principal reconstruction only, nothing trainable.
struct TruncatedFrozenAdapter {
  TruncatedSvd base;
};

struct FullFrozenAdapter {
  Matrix w0;
};

using AdapterPayload = std::variant<LoraAdapter, DoraAdapter, SpectralAdapter,
                                    SpectralPlusMinorAdapter, TruncatedFrozenAdapter,
                                    FullFrozenAdapter>;

struct ParamCount {
  std::size_t trainable = 0;
  std::size_t frozen = 0;

  friend bool operator==(const ParamCount&, const ParamCount&) = default;
};

/// Mutable handle to one trainable matrix, named as in checkpoints
/// (B, A, B_U, A_U, B_V, A_V, magnitude).
struct NamedParam {
  std::string name;
  Matrix* value = nullptr;
};

struct NamedGrad {
  std::string name;
  Matrix grad;
};

using GradientSet = std::vector<NamedGrad>;

class Adapter {
 public:
  explicit Adapter(AdapterPayload payload) : payload_(std::move(payload)) {}

  AdapterKind kind() const noexcept;
  const AdapterPayload& payload() const noexcept { return payload_; }
  AdapterPayload& payload() noexcept { return payload_; }

  std::size_t rows() const;
  std::size_t cols() const;
  /// Delta rank, absent for frozen variants.
  std::optional<std::size_t> rank() const;
  /// Principal-column count, absent for Lora, Dora and FullFrozen.
  std::optional<std::size_t> principal_count() const;
  std::optional<double> alpha() const;

  /// Trainable matrices in a fixed order; empty for frozen variants.
  std::vector<NamedParam> trainable_params();

 private:
  AdapterPayload payload_;
};

struct AdapterSpec {
  AdapterKind kind = AdapterKind::kSpectral;
  std::size_t rank = 16;
  std::size_t principal_count = 256;
  double alpha = 1.6;
  std::uint64_t seed = 0;
};

/// Builds an adapter around the frozen weight `w`. B-type factors start at
/// zero and A-type factors are i.i.d. N(0, 1) from a generator seeded with
/// spec.seed. Truncated variants take their SVD from `cache`.
///
/// Requires 1 <= r <= min(m, n) for Lora/Dora, 1 <= r < k <= min(m, n) for
/// the spectral variants and 1 <= k <= min(m, n) for TruncatedFrozen;
/// ConfigError otherwise.
Adapter init_adapter(const Matrix& w, const AdapterSpec& spec,
                     SvdCache& cache = SvdCache::global());

Matrix effective_weight(const Adapter& adapter);

/// Dense weight equal to effective_weight(); FullFrozen returns W0 untouched.
Matrix merge(const Adapter& adapter);

ParamCount param_count(const Adapter& adapter);

/// Gradients of the trainable factors given g = dL/dW_eff. Entries follow the
/// order of Adapter::trainable_params(). Frozen variants yield an empty set.
GradientSet adapter_backward(const Adapter& adapter, const Matrix& g);

}  // namespace spectral
