// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/adapter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "spectral/diagnostics.hpp"
#include "spectral/errors.hpp"

namespace spectral {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::array<std::pair<AdapterKind, std::string_view>, 6> kKindNames{{
    {AdapterKind::kLora, "lora"},
    {AdapterKind::kDora, "dora"},
    {AdapterKind::kSpectral, "spectral"},
    {AdapterKind::kSpectralPlusMinor, "spectral_plus_minor"},
    {AdapterKind::kTruncatedFrozen, "truncated_frozen"},
    {AdapterKind::kFullFrozen, "full_frozen"},
}};

constexpr double kDegenerateColumnNorm = 1e-12;

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

LowRankDelta make_delta(std::size_t p, std::size_t q, std::size_t rank, double alpha,
                        std::mt19937_64& rng) {
  LowRankDelta d;
  d.b = Matrix(p, rank, 0.0);
  d.a = gaussian(rank, q, rng);
  d.rank = rank;
  d.alpha = alpha;
  return d;
}

Matrix spectral_weight(const SpectralAdapter& s) {
  const Matrix u_hat = s.base.u_p + s.delta_u.product();
  const Matrix v_hat = s.base.v_p + s.delta_v.product();
  return matmul_nt(scale_columns(u_hat, s.base.sigma_p), v_hat);
}

struct DoraColumns {
  Matrix direction;          // D = W0 + delta
  std::vector<double> norm;  // ‖D[:, j]‖
  std::vector<bool> degenerate;
};

DoraColumns dora_columns(const DoraAdapter& d) {
  DoraColumns out{d.w0 + d.delta.product(), {}, {}};
  const std::size_t n = out.direction.cols();
  out.norm.assign(n, 0.0);
  out.degenerate.assign(n, false);
  for (std::size_t r = 0; r < out.direction.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) out.norm[j] += out.direction(r, j) * out.direction(r, j);
  for (std::size_t j = 0; j < n; ++j) {
    out.norm[j] = std::sqrt(out.norm[j]);
    if (out.norm[j] < kDegenerateColumnNorm) {
      out.degenerate[j] = true;
      diag::warn("dora: column " + std::to_string(j) +
                 " has near-zero direction norm; falling back to e1");
    }
  }
  return out;
}

Matrix dora_weight(const DoraAdapter& d) {
  const DoraColumns cols = dora_columns(d);
  Matrix w(cols.direction.rows(), cols.direction.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const double mag = d.magnitude(0, j);
    if (cols.degenerate[j]) {
      w(0, j) = mag;
      continue;
    }
    for (std::size_t r = 0; r < w.rows(); ++r) w(r, j) = mag * cols.direction(r, j) / cols.norm[j];
  }
  return w;
}

void lora_grads(const LowRankDelta& delta, const Matrix& g_direction, const std::string& b_name,
                const std::string& a_name, GradientSet& out) {
  const double s = delta.scale();
  out.push_back({b_name, matmul_nt(g_direction, delta.a) * s});
  out.push_back({a_name, matmul_tn(delta.b, g_direction) * s});
}

GradientSet spectral_grads(const SpectralAdapter& s, const Matrix& g) {
  const Matrix u_hat = s.base.u_p + s.delta_u.product();
  const Matrix v_hat = s.base.v_p + s.delta_v.product();
  // dL/dÛ = G·V̂·Σ_p and dL/dV̂ = Gᵀ·Û·Σ_p
  const Matrix grad_u_hat = scale_columns(matmul(g, v_hat), s.base.sigma_p);
  const Matrix grad_v_hat = scale_columns(matmul_tn(g, u_hat), s.base.sigma_p);
  GradientSet out;
  lora_grads(s.delta_u, grad_u_hat, "B_U", "A_U", out);
  lora_grads(s.delta_v, grad_v_hat, "B_V", "A_V", out);
  return out;
}

GradientSet dora_grads(const DoraAdapter& d, const Matrix& g) {
  const DoraColumns cols = dora_columns(d);
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  Matrix grad_direction(m, n);
  Matrix grad_magnitude(1, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (cols.degenerate[j]) {
      grad_magnitude(0, j) = g(0, j);
      continue;
    }
    const double c = cols.norm[j];
    const double mag = d.magnitude(0, j);
    double g_dot_d = 0.0;
    for (std::size_t r = 0; r < m; ++r) g_dot_d += g(r, j) * cols.direction(r, j);
    grad_magnitude(0, j) = g_dot_d / c;
    const double coef = g_dot_d / (c * c);
    for (std::size_t r = 0; r < m; ++r)
      grad_direction(r, j) = (mag / c) * (g(r, j) - coef * cols.direction(r, j));
  }
  GradientSet out;
  lora_grads(d.delta, grad_direction, "B", "A", out);
  out.push_back({"magnitude", std::move(grad_magnitude)});
  return out;
}

void check_rank(std::size_t rank, std::size_t limit, const char* what) {
  if (rank < 1 || rank > limit) {
    throw ConfigError(std::string(what) + ": rank r=" + std::to_string(rank) + " outside [1, " +
                      std::to_string(limit) + "]");
  }
}

}  // namespace

std::string_view to_string(AdapterKind kind) noexcept {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

AdapterKind parse_adapter_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ConfigError("unknown adapter tag '" + std::string(name) + "'");
}

bool has_trainable_delta(AdapterKind kind) noexcept {
  return kind == AdapterKind::kLora || kind == AdapterKind::kDora ||
         kind == AdapterKind::kSpectral || kind == AdapterKind::kSpectralPlusMinor;
}

bool uses_truncation(AdapterKind kind) noexcept {
  return kind == AdapterKind::kSpectral || kind == AdapterKind::kSpectralPlusMinor ||
         kind == AdapterKind::kTruncatedFrozen;
}

AdapterKind Adapter::kind() const noexcept {
  return static_cast<AdapterKind>(payload_.index());
}

std::size_t Adapter::rows() const {
  return std::visit(Overloaded{
                        [](const LoraAdapter& a) { return a.w0.rows(); },
                        [](const DoraAdapter& a) { return a.w0.rows(); },
                        [](const SpectralAdapter& a) { return a.base.rows(); },
                        [](const SpectralPlusMinorAdapter& a) { return a.minor.rows(); },
                        [](const TruncatedFrozenAdapter& a) { return a.base.rows(); },
                        [](const FullFrozenAdapter& a) { return a.w0.rows(); },
                    },
                    payload_);
}

std::size_t Adapter::cols() const {
  return std::visit(Overloaded{
                        [](const LoraAdapter& a) { return a.w0.cols(); },
                        [](const DoraAdapter& a) { return a.w0.cols(); },
                        [](const SpectralAdapter& a) { return a.base.cols(); },
                        [](const SpectralPlusMinorAdapter& a) { return a.minor.cols(); },
                        [](const TruncatedFrozenAdapter& a) { return a.base.cols(); },
                        [](const FullFrozenAdapter& a) { return a.w0.cols(); },
                    },
                    payload_);
}

std::optional<std::size_t> Adapter::rank() const {
  using R = std::optional<std::size_t>;
  return std::visit(Overloaded{
                        [](const LoraAdapter& a) -> R { return a.delta.rank; },
                        [](const DoraAdapter& a) -> R { return a.delta.rank; },
                        [](const SpectralAdapter& a) -> R { return a.delta_u.rank; },
                        [](const SpectralPlusMinorAdapter& a) -> R {
                          return a.spectral.delta_u.rank;
                        },
                        [](const auto&) -> R { return std::nullopt; },
                    },
                    payload_);
}

std::optional<std::size_t> Adapter::principal_count() const {
  using R = std::optional<std::size_t>;
  return std::visit(Overloaded{
                        [](const SpectralAdapter& a) -> R { return a.base.k; },
                        [](const SpectralPlusMinorAdapter& a) -> R { return a.spectral.base.k; },
                        [](const TruncatedFrozenAdapter& a) -> R { return a.base.k; },
                        [](const auto&) -> R { return std::nullopt; },
                    },
                    payload_);
}

std::optional<double> Adapter::alpha() const {
  using R = std::optional<double>;
  return std::visit(Overloaded{
                        [](const LoraAdapter& a) -> R { return a.delta.alpha; },
                        [](const DoraAdapter& a) -> R { return a.delta.alpha; },
                        [](const SpectralAdapter& a) -> R { return a.delta_u.alpha; },
                        [](const SpectralPlusMinorAdapter& a) -> R {
                          return a.spectral.delta_u.alpha;
                        },
                        [](const auto&) -> R { return std::nullopt; },
                    },
                    payload_);
}

std::vector<NamedParam> Adapter::trainable_params() {
  auto spectral = [](SpectralAdapter& s) {
    return std::vector<NamedParam>{{"B_U", &s.delta_u.b},
                                   {"A_U", &s.delta_u.a},
                                   {"B_V", &s.delta_v.b},
                                   {"A_V", &s.delta_v.a}};
  };
  return std::visit(
      Overloaded{
          [](LoraAdapter& a) {
            return std::vector<NamedParam>{{"B", &a.delta.b}, {"A", &a.delta.a}};
          },
          [](DoraAdapter& a) {
            return std::vector<NamedParam>{
                {"B", &a.delta.b}, {"A", &a.delta.a}, {"magnitude", &a.magnitude}};
          },
          [&](SpectralAdapter& a) { return spectral(a); },
          [&](SpectralPlusMinorAdapter& a) { return spectral(a.spectral); },
          [](auto&) { return std::vector<NamedParam>{}; },
      },
      payload_);
}

Adapter init_adapter(const Matrix& w, const AdapterSpec& spec, SvdCache& cache) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  const std::size_t min_dim = std::min(m, n);
  if (m == 0 || n == 0) throw ShapeError("init_adapter: empty weight " + w.shape_string());
  if (has_trainable_delta(spec.kind) && !(spec.alpha > 0.0 && std::isfinite(spec.alpha))) {
    throw ConfigError("init_adapter: alpha must be positive, got " + std::to_string(spec.alpha));
  }
  std::mt19937_64 rng(spec.seed);

  switch (spec.kind) {
    case AdapterKind::kLora: {
      check_rank(spec.rank, min_dim, "lora");
      return Adapter(LoraAdapter{w, make_delta(m, n, spec.rank, spec.alpha, rng)});
    }
    case AdapterKind::kDora: {
      check_rank(spec.rank, min_dim, "dora");
      DoraAdapter d{w, make_delta(m, n, spec.rank, spec.alpha, rng), Matrix(1, n)};
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < m; ++r) s += w(r, j) * w(r, j);
        d.magnitude(0, j) = std::sqrt(s);
      }
      return Adapter(std::move(d));
    }
    case AdapterKind::kTruncatedFrozen: {
      if (spec.principal_count < 1 || spec.principal_count > min_dim) {
        throw ConfigError("truncated_frozen: k=" + std::to_string(spec.principal_count) +
                          " outside [1, " + std::to_string(min_dim) + "]");
      }
      return Adapter(TruncatedFrozenAdapter{truncate_svd(*cache.get(w), spec.principal_count)});
    }
    case AdapterKind::kFullFrozen:
      return Adapter(FullFrozenAdapter{w});
    case AdapterKind::kSpectral:
    case AdapterKind::kSpectralPlusMinor: {
      const std::size_t k = spec.principal_count;
      if (k > min_dim) {
        throw ConfigError("spectral: k=" + std::to_string(k) + " exceeds min(m, n)=" +
                          std::to_string(min_dim));
      }
      if (spec.rank < 1 || spec.rank >= k) {
        throw ConfigError("spectral: need 1 <= r < k, got r=" + std::to_string(spec.rank) +
                          ", k=" + std::to_string(k));
      }
      SpectralAdapter s;
      s.base = truncate_svd(*cache.get(w), k);
      s.delta_u = make_delta(m, k, spec.rank, spec.alpha, rng);
      s.delta_v = make_delta(n, k, spec.rank, spec.alpha, rng);
      if (spec.kind == AdapterKind::kSpectral) return Adapter(std::move(s));
      Matrix minor = w - reconstruct(s.base);
      return Adapter(SpectralPlusMinorAdapter{std::move(s), std::move(minor)});
    }
  }
  throw ConfigError("init_adapter: unhandled adapter kind");
}

Matrix effective_weight(const Adapter& adapter) {
  return std::visit(Overloaded{
                        [](const LoraAdapter& a) { return a.w0 + a.delta.product(); },
                        [](const DoraAdapter& a) { return dora_weight(a); },
                        [](const SpectralAdapter& a) { return spectral_weight(a); },
                        [](const SpectralPlusMinorAdapter& a) {
                          return spectral_weight(a.spectral) + a.minor;
                        },
                        [](const TruncatedFrozenAdapter& a) { return reconstruct(a.base); },
                        [](const FullFrozenAdapter& a) { return a.w0; },
                    },
                    adapter.payload());
}

Matrix merge(const Adapter& adapter) { return effective_weight(adapter); }

ParamCount param_count(const Adapter& adapter) {
  auto truncated = [](const TruncatedSvd& t) {
    return t.u_p.size() + t.sigma_p.size() + t.v_p.size();
  };
  auto delta = [](const LowRankDelta& d) { return d.b.size() + d.a.size(); };
  return std::visit(
      Overloaded{
          [&](const LoraAdapter& a) { return ParamCount{delta(a.delta), a.w0.size()}; },
          [&](const DoraAdapter& a) {
            return ParamCount{delta(a.delta) + a.magnitude.size(), a.w0.size()};
          },
          [&](const SpectralAdapter& a) {
            return ParamCount{delta(a.delta_u) + delta(a.delta_v), truncated(a.base)};
          },
          [&](const SpectralPlusMinorAdapter& a) {
            return ParamCount{delta(a.spectral.delta_u) + delta(a.spectral.delta_v),
                              truncated(a.spectral.base) + a.minor.size()};
          },
          [&](const TruncatedFrozenAdapter& a) { return ParamCount{0, truncated(a.base)}; },
          [](const FullFrozenAdapter& a) { return ParamCount{0, a.w0.size()}; },
      },
      adapter.payload());
}

GradientSet adapter_backward(const Adapter& adapter, const Matrix& g) {
  if (g.rows() != adapter.rows() || g.cols() != adapter.cols()) {
    throw ShapeError("adapter_backward: gradient " + g.shape_string() + " for a " +
                     std::to_string(adapter.rows()) + "x" + std::to_string(adapter.cols()) +
                     " adapter");
  }
  return std::visit(Overloaded{
                        [&](const LoraAdapter& a) {
                          GradientSet out;
                          lora_grads(a.delta, g, "B", "A", out);
                          return out;
                        },
                        [&](const DoraAdapter& a) { return dora_grads(a, g); },
                        [&](const SpectralAdapter& a) { return spectral_grads(a, g); },
                        [&](const SpectralPlusMinorAdapter& a) {
                          return spectral_grads(a.spectral, g);
                        },
                        [](const auto&) { return GradientSet{}; },
                    },
                    adapter.payload());
}

}  // namespace spectral
