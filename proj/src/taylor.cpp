#include "taylormlp/taylor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "taylormlp/errors.hpp"

namespace taylormlp {

namespace {

bool strictly_ascending(const std::vector<std::size_t>& idx, std::size_t bound) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= bound) return false;
    if (k > 0 && idx[k] <= idx[k - 1]) return false;
  }
  return true;
}

}  // namespace

void TaylorPackage::validate() const {
  if (order < 0 || order > kMaxOrder) throw ContractError("package order out of range");
  const std::size_t d_int = d_intermediate();
  if (d_int == 0 || d_model() == 0 || d_out == 0) throw ContractError("package has empty dimensions");
  if (!strictly_ascending(protected_idx, d_int) || !strictly_ascending(unprotected_idx, d_int) ||
      protected_idx.size() + unprotected_idx.size() != d_int) {
    throw ContractError("protected/unprotected index sets do not partition the columns");
  }
  std::vector<std::size_t> all(protected_idx);
  all.insert(all.end(), unprotected_idx.begin(), unprotected_idx.end());
  std::sort(all.begin(), all.end());
  for (std::size_t j = 0; j < d_int; ++j) {
    if (all[j] != j) throw ContractError("protected/unprotected index sets overlap");
  }
  if (z0.size() != k()) throw ContractError("z0 length must equal K");
  if (theta.size() != d_out * static_cast<std::size_t>(order + 1) * k()) {
    throw ContractError("theta size must equal d_out * (order + 1) * K");
  }
  const std::size_t u = unprotected_idx.size();
  const bool residual_ok = u == 0 ? residual_W.size() == 0
                                  : residual_W.rows() == d_out && residual_W.cols() == u;
  if (!residual_ok || residual_b.size() != u) {
    throw ContractError("residual weights do not match the unprotected columns");
  }
  const bool full = u == 0 && k() > 0;
  if (full ? !c.empty() : c.size() != d_out) {
    throw ContractError("bias c must be folded under full protection and in clear otherwise");
  }
  if (!all_finite(V.data()) || !all_finite(z0) || !all_finite(theta) ||
      !all_finite(residual_W.data()) || !all_finite(residual_b) || !all_finite(c)) {
    throw ContractError("package contains non-finite values");
  }
}

TaylorPackage transform(const MlpWeights& weights, const ProtectionPlan& plan, int order,
                        Exec exec) {
  if (order < 0) throw ConfigError("expansion order must be non-negative");
  if (order > kMaxOrder) {
    throw ConfigError("expansion order " + std::to_string(order) + " exceeds " +
                      std::to_string(kMaxOrder) + " (factorials no longer exact)");
  }
  weights.validate();
  const std::size_t d_int = weights.d_intermediate();
  if (plan.z0.size() != d_int || !strictly_ascending(plan.protected_idx, d_int)) {
    throw ContractError("protection plan does not match the weights");
  }

  TaylorPackage pkg;
  pkg.activation = weights.activation;
  pkg.order = order;
  pkg.V = weights.V;
  pkg.protected_idx = plan.protected_idx;
  pkg.unprotected_idx = plan.unprotected_idx();
  pkg.d_out = weights.d_out();

  const std::size_t k = pkg.k();
  const std::size_t terms = static_cast<std::size_t>(order) + 1;
  const bool fold_bias = k == d_int && k > 0;

  pkg.z0.resize(k);
  // coef[n * k + j] = Act^(n)(z0 + b) / n! at protected column j
  Vector coef(terms * k);
  Vector row(terms);
  const auto& fact = factorials();
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t col = plan.protected_idx[j];
    pkg.z0[j] = plan.z0[col];
    derivative_row(weights.activation, order, plan.z0[col] + weights.b[col], row);
    for (std::size_t n = 0; n < terms; ++n) coef[n * k + j] = row[n] / fact[n];
  }

  pkg.theta.assign(pkg.d_out * terms * k, 0.0);
  const double bias_share = fold_bias ? 1.0 / static_cast<double>(k) : 0.0;
  auto fill_row = [&](std::size_t i) {
    double* out = pkg.theta.data() + i * terms * k;
    const auto w_row = weights.W.row(i);
    for (std::size_t n = 0; n < terms; ++n) {
      for (std::size_t j = 0; j < k; ++j) {
        out[n * k + j] = w_row[plan.protected_idx[j]] * coef[n * k + j];
      }
    }
    if (fold_bias) {
      for (std::size_t j = 0; j < k; ++j) out[j] += weights.c[i] * bias_share;
    }
  };
  const auto rows = static_cast<std::int64_t>(pkg.d_out);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) fill_row(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < rows; ++i) fill_row(static_cast<std::size_t>(i));
  }

  const std::size_t u = pkg.unprotected_idx.size();
  pkg.residual_W = Matrix(u == 0 ? 0 : pkg.d_out, u);
  pkg.residual_b.resize(u);
  for (std::size_t m = 0; m < u; ++m) {
    const std::size_t col = pkg.unprotected_idx[m];
    pkg.residual_b[m] = weights.b[col];
    for (std::size_t i = 0; i < pkg.d_out; ++i) pkg.residual_W(i, m) = weights.W(i, col);
  }
  if (!fold_bias) pkg.c = weights.c;
  return pkg;
}

TaylorForwardTrace taylor_forward(const TaylorPackage& pkg, std::span<const double> x,
                                  Exec exec) {
  if (x.size() != pkg.d_model()) throw ContractError("input length must equal d_model");
  const std::size_t k = pkg.k();
  const std::size_t terms = static_cast<std::size_t>(pkg.order) + 1;

  TaylorForwardTrace t;
  t.x.assign(x.begin(), x.end());
  t.z_p.resize(k);
  matvec_rows(pkg.V, pkg.protected_idx, x, t.z_p, exec);
  t.delta.resize(k);
  for (std::size_t j = 0; j < k; ++j) t.delta[j] = t.z_p[j] - pkg.z0[j];

  t.powers.assign(terms * k, 1.0);
  for (std::size_t n = 1; n < terms; ++n) {
    const double* prev = t.powers.data() + (n - 1) * k;
    double* cur = t.powers.data() + n * k;
    for (std::size_t j = 0; j < k; ++j) cur[j] = prev[j] * t.delta[j];
  }

  if (pkg.activation == ActivationKind::silu) {
    t.radius_violation = std::any_of(t.delta.begin(), t.delta.end(), [](double d) {
      return std::abs(d) > kSiluRadiusGuard;
    });
  }

  const std::size_t u = pkg.unprotected_idx.size();
  Vector a_u(u);
  if (u > 0) {
    Vector z_u(u);
    matvec_rows(pkg.V, pkg.unprotected_idx, x, z_u, exec);
    for (std::size_t m = 0; m < u; ++m) a_u[m] = activation_value(pkg.activation, z_u[m] + pkg.residual_b[m]);
  }

  t.y.resize(pkg.d_out);
  auto out_row = [&](std::size_t i) {
    double acc = dot(pkg.theta_row(i), t.powers);
    if (u > 0) acc += dot(pkg.residual_W.row(i), a_u);
    if (!pkg.c.empty()) acc += pkg.c[i];
    t.y[i] = acc;
  };
  const auto rows = static_cast<std::int64_t>(pkg.d_out);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) out_row(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < rows; ++i) out_row(static_cast<std::size_t>(i));
  }
  return t;
}

MacCount plain_mac_count(const MlpShape& shape, std::size_t protected_k) {
  if (protected_k > shape.d_intermediate) throw ContractError("K exceeds d_intermediate");
  const std::uint64_t k = protected_k;
  const std::uint64_t u = shape.d_intermediate - protected_k;
  const std::uint64_t d_out = shape.d_out;
  MacCount m;
  m.projection = static_cast<std::uint64_t>(shape.d_intermediate) * shape.d_model;
  m.protected_part = k + d_out * k;
  m.unprotected_part = u + d_out * u + d_out;
  return m;
}

MacCount taylor_mac_count(const TaylorPackage& pkg) {
  const std::uint64_t k = pkg.k();
  const std::uint64_t u = pkg.unprotected_idx.size();
  const std::uint64_t d_out = pkg.d_out;
  const std::uint64_t n = static_cast<std::uint64_t>(pkg.order);
  MacCount m;
  m.projection = static_cast<std::uint64_t>(pkg.d_intermediate()) * pkg.d_model();
  // delta, then powers 2..N (power 1 is delta itself), then one inner product
  // of length (N + 1) K per output row.
  m.protected_part = k + (n >= 2 ? (n - 1) * k : 0) + d_out * (n + 1) * k;
  m.unprotected_part = u + d_out * u + (pkg.c.empty() ? 0 : d_out);
  return m;
}

std::uint64_t flop_count(const MlpWeights& weights) {
  return plain_mac_count({weights.d_model(), weights.d_intermediate(), weights.d_out()}, 0).total();
}

std::uint64_t flop_count(const TaylorPackage& pkg, FlopMode mode) {
  if (mode == FlopMode::taylor) return taylor_mac_count(pkg).total();
  return plain_mac_count({pkg.d_model(), pkg.d_intermediate(), pkg.d_out}, pkg.k()).total();
}

}  // namespace taylormlp
