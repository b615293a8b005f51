#include "taylormlp/calibration.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "taylormlp/errors.hpp"

namespace taylormlp {

CalibrationStats CalibrationStats::empty(std::size_t d_intermediate) {
  return {Vector(d_intermediate, -std::numeric_limits<double>::infinity()),
          Vector(d_intermediate, std::numeric_limits<double>::infinity()), 0};
}

void CalibrationStats::fold(std::span<const double> z) {
  if (z.size() != dims()) throw ContractError("pre-activation length does not match stats");
  for (std::size_t j = 0; j < z.size(); ++j) {
    z_max[j] = std::max(z_max[j], z[j]);
    z_min[j] = std::min(z_min[j], z[j]);
  }
  ++count;
}

void CalibrationStats::merge(const CalibrationStats& other) {
  if (other.dims() != dims()) throw ContractError("cannot merge stats of different widths");
  for (std::size_t j = 0; j < dims(); ++j) {
    z_max[j] = std::max(z_max[j], other.z_max[j]);
    z_min[j] = std::min(z_min[j], other.z_min[j]);
  }
  count += other.count;
}

CalibrationStats observe(CalibrationStats stats, const MlpWeights& weights,
                         std::span<const double> x) {
  if (x.size() != weights.d_model()) throw ContractError("calibration input length must equal d_model");
  if (stats.dims() != weights.d_intermediate()) {
    throw ContractError("stats width must equal d_intermediate");
  }
  Vector z(weights.d_intermediate());
  matvec(weights.V, x, z, Exec::serial);
  stats.fold(z);
  return stats;
}

CalibrationStats observe_batch(const MlpWeights& weights, std::span<const Vector> xs,
                               Exec exec) {
  auto total = CalibrationStats::empty(weights.d_intermediate());
  const auto n = static_cast<std::int64_t>(xs.size());
  if (exec == Exec::serial) {
    for (const auto& x : xs) total = observe(std::move(total), weights, x);
    return total;
  }
#pragma omp parallel
  {
    auto local = CalibrationStats::empty(weights.d_intermediate());
#pragma omp for schedule(static) nowait
    for (std::int64_t s = 0; s < n; ++s) local = observe(std::move(local), weights, xs[s]);
#pragma omp critical
    total.merge(local);
  }
  return total;
}

CalibrationStats merge(CalibrationStats a, const CalibrationStats& b) {
  a.merge(b);
  return a;
}

Vector estimate_local_embedding(const CalibrationStats& stats) {
  if (stats.count == 0) throw StateError("local embedding needs at least one calibration sample");
  Vector z0(stats.dims());
  for (std::size_t j = 0; j < z0.size(); ++j) z0[j] = 0.5 * (stats.z_max[j] + stats.z_min[j]);
  return z0;
}

std::vector<std::size_t> ProtectionPlan::unprotected_idx() const {
  std::vector<std::size_t> out;
  out.reserve(z0.size() - protected_idx.size());
  std::size_t p = 0;
  for (std::size_t j = 0; j < z0.size(); ++j) {
    if (p < protected_idx.size() && protected_idx[p] == j) {
      ++p;
    } else {
      out.push_back(j);
    }
  }
  return out;
}

ProtectionPlan select_protected_columns(const CalibrationStats& stats, std::size_t k,
                                        ActivationKind kind) {
  const std::size_t d = stats.dims();
  if (k < 1 || k > d) {
    throw ContractError("protected column count must lie in [1, d_intermediate]");
  }
  ProtectionPlan plan;
  plan.z0 = estimate_local_embedding(stats);
  plan.spread.resize(d);
  for (std::size_t j = 0; j < d; ++j) plan.spread[j] = stats.z_max[j] - stats.z_min[j];

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return plan.spread[l] < plan.spread[r];
  });
  plan.protected_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(plan.protected_idx.begin(), plan.protected_idx.end());

  if (kind == ActivationKind::silu) {
    for (std::size_t j : plan.protected_idx) {
      if (0.5 * plan.spread[j] >= kSiluRadiusGuard) plan.radius_warnings.push_back(j);
    }
  }
  return plan;
}

ProtectionPlan unprotected_plan(const CalibrationStats& stats) {
  ProtectionPlan plan;
  plan.z0 = estimate_local_embedding(stats);
  plan.spread.resize(stats.dims());
  for (std::size_t j = 0; j < stats.dims(); ++j) plan.spread[j] = stats.z_max[j] - stats.z_min[j];
  return plan;
}

}  // namespace taylormlp
