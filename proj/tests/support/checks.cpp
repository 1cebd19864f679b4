// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "checks.hpp"

#include <cmath>
#include <random>
#include <variant>

#include "oracles.hpp"
#include "spectral/aam_loss.hpp"
#include "spectral/experiment.hpp"

namespace spectral::check {
namespace {

double inner(const Matrix& g, const Matrix& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) acc += g(i, j) * w(i, j);
  return acc;
}

void compare(GradientReport& report, const std::string& name, const Matrix& analytic,
             const Matrix& numeric) {
  const double err = oracle::relative_error(analytic, numeric);
  if (err >= report.worst) {
    report.worst = err;
    report.worst_param = name;
  }
}

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) y[i] += m(i, j) * x[j];
  return y;
}

std::vector<double> matvec_t(const Matrix& m, const std::vector<double>& x) {
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += m(i, j) * x[i];
  return y;
}

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// [U + s_u·B_U·A_U]·diag(σ)·[V + s_v·B_V·A_V]ᵀ·x, one factor at a time.
std::vector<double> spectral_matvec(const SpectralAdapter& s, const std::vector<double>& x) {
  std::vector<double> z = matvec_t(s.base.v_p, x);
  axpy(z, s.delta_v.scale(), matvec_t(s.delta_v.a, matvec_t(s.delta_v.b, x)));
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= s.base.sigma_p[i];
  std::vector<double> y = matvec(s.base.u_p, z);
  axpy(y, s.delta_u.scale(), matvec(s.delta_u.b, matvec(s.delta_u.a, z)));
  return y;
}

}  // namespace

GradientReport adapter_gradient(AdapterKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 9);
  const std::size_t m = dim(rng), n = dim(rng);
  const std::size_t lim = std::min(m, n);
  AdapterSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.alpha = std::uniform_real_distribution<double>(0.2, 2.0)(rng);
  spec.principal_count = std::uniform_int_distribution<std::size_t>(2, lim)(rng);
  const std::size_t max_rank = uses_truncation(kind) ? spec.principal_count - 1 : lim;
  spec.rank = std::uniform_int_distribution<std::size_t>(1, max_rank)(rng);

  Adapter a = init_adapter(oracle::random_matrix(m, n, rng), spec);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (NamedParam p : a.trainable_params())
    for (double& v : p.value->data()) v += normal(rng);

  const Matrix g = oracle::random_matrix(m, n, rng);
  const GradientSet analytic = adapter_backward(a, g);
  const std::vector<NamedParam> params = a.trainable_params();
  GradientReport report;
  report.shape = std::to_string(m) + "x" + std::to_string(n);
  report.names_match = analytic.size() == params.size();
  for (std::size_t i = 0; i < params.size() && i < analytic.size(); ++i) {
    report.names_match = report.names_match && analytic[i].name == params[i].name;
    const Matrix numeric =
        oracle::numeric_gradient(*params[i].value, [&] { return inner(g, effective_weight(a)); });
    compare(report, params[i].name, analytic[i].grad, numeric);
  }
  return report;
}

GradientReport end_to_end_gradient(AdapterKind kind, const std::vector<Projection>& positions,
                                   std::size_t heads, std::uint64_t seed) {
  ModelDims dims;
  dims.d_in = 5;
  dims.d = 8;
  dims.hidden = 12;
  dims.heads = heads;
  dims.classes = 5;
  Model m = Model::random(dims, seed);
  m.dense_trainable = false;
  AdapterConfig cfg;
  cfg.kind = kind;
  cfg.rank = 2;
  cfg.principal_count = 4;
  cfg.alpha = 0.7;
  attach_adapters(m, cfg, positions, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (NamedParam p : m.trainable_params())
    if (p.name != "classifier")
      for (double& v : p.value->data()) v += normal(rng);
  m.refresh();

  AamConfig aam;
  aam.scale = 10.0;
  const Matrix frames = oracle::random_matrix(4, dims.d_in, rng);
  const std::size_t label = seed % dims.classes;
  auto loss_now = [&] {
    m.refresh();
    return aam_loss(model_forward(m, frames).embedding, label, m.classifier, aam).loss;
  };

  const ForwardResult f = model_forward(m, frames);
  const AamResult loss = aam_loss(f.embedding, label, m.classifier, aam);
  GradientSet analytic = model_backward(m, f.cache, loss.grad_embedding);
  analytic.push_back({"classifier", loss.grad_classifier});

  const std::vector<NamedParam> params = m.trainable_params();
  GradientReport report;
  report.shape = "d=8 T=4 C=5 heads=" + std::to_string(heads);
  report.names_match = analytic.size() == params.size();
  for (std::size_t i = 0; i < params.size() && i < analytic.size(); ++i) {
    report.names_match = report.names_match && analytic[i].name == params[i].name;
    compare(report, params[i].name, analytic[i].grad,
            oracle::numeric_gradient(*params[i].value, loss_now));
  }
  return report;
}

std::vector<double> factored_matvec(const Adapter& a, const std::vector<double>& x) {
  return std::visit(
      [&](const auto& p) -> std::vector<double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LoraAdapter>) {
          std::vector<double> y = matvec(p.w0, x);
          axpy(y, p.delta.scale(), matvec(p.delta.b, matvec(p.delta.a, x)));
          return y;
        } else if constexpr (std::is_same_v<T, DoraAdapter>) {
          // Column j of the direction is W0[:, j] + s·B·A[:, j]; rescale x per column.
          const Matrix dir = p.w0 + oracle::naive_matmul(p.delta.b, p.delta.a) * p.delta.scale();
          std::vector<double> xs = x;
          for (std::size_t j = 0; j < xs.size(); ++j) {
            double norm = 0.0;
            for (std::size_t i = 0; i < dir.rows(); ++i) norm += dir(i, j) * dir(i, j);
            xs[j] *= p.magnitude(0, j) / std::sqrt(norm);
          }
          return matvec(dir, xs);
        } else if constexpr (std::is_same_v<T, SpectralAdapter>) {
          return spectral_matvec(p, x);
        } else if constexpr (std::is_same_v<T, SpectralPlusMinorAdapter>) {
          std::vector<double> y = spectral_matvec(p.spectral, x);
          axpy(y, 1.0, matvec(p.minor, x));
          return y;
        } else if constexpr (std::is_same_v<T, TruncatedFrozenAdapter>) {
          std::vector<double> z = matvec_t(p.base.v_p, x);
          for (std::size_t i = 0; i < z.size(); ++i) z[i] *= p.base.sigma_p[i];
          return matvec(p.base.u_p, z);
        } else {
          return matvec(p.w0, x);
        }
      },
      a.payload());
}

}  // namespace spectral::check
