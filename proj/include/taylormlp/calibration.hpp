#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "taylormlp/activation.hpp"
#include "taylormlp/linalg.hpp"
#include "taylormlp/mlp.hpp"

namespace taylormlp {

// Running per-dimension extrema of z = V x over a calibration stream.
struct CalibrationStats {
  Vector z_max;
  Vector z_min;
  std::uint64_t count = 0;

  static CalibrationStats empty(std::size_t d_intermediate);

  std::size_t dims() const { return z_max.size(); }

  // Folds one pre-activation vector into the extrema.
  void fold(std::span<const double> z);
  // Extrema of the union of both streams. Associative and commutative.
  void merge(const CalibrationStats& other);

  friend bool operator==(const CalibrationStats&, const CalibrationStats&) = default;
};

CalibrationStats observe(CalibrationStats stats, const MlpWeights& weights,
                         std::span<const double> x);

// Accumulates a whole batch; splits the batch across threads and merges the
// partial extrema.
CalibrationStats observe_batch(const MlpWeights& weights, std::span<const Vector> xs,
                               Exec exec = Exec::parallel);

CalibrationStats merge(CalibrationStats a, const CalibrationStats& b);

// Minimax center (z_max + z_min) / 2. Throws StateError when count == 0.
Vector estimate_local_embedding(const CalibrationStats& stats);

// Half-spread above which a SiLU column is flagged: the sigmoid's Taylor series
// about a real point converges within radius >= pi (poles at +-i pi).
inline constexpr double kSiluRadiusGuard = 3.0;

struct ProtectionPlan {
  Vector z0;                              // full length d_intermediate
  std::vector<std::size_t> protected_idx;  // ascending
  Vector spread;                          // z_max - z_min
  // Protected columns whose half-spread reaches kSiluRadiusGuard (SiLU only).
  std::vector<std::size_t> radius_warnings;

  std::size_t k() const { return protected_idx.size(); }
  std::vector<std::size_t> unprotected_idx() const;
};

// Protects the K columns with the smallest spread; ties go to the lower index.
// Throws ContractError unless 1 <= K <= d_intermediate.
ProtectionPlan select_protected_columns(const CalibrationStats& stats, std::size_t k,
                                        ActivationKind kind);

// A plan that protects nothing; the control arm of attack experiments.
ProtectionPlan unprotected_plan(const CalibrationStats& stats);

}  // namespace taylormlp
