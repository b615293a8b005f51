#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taylormlp/calibration.hpp"
#include "taylormlp/mlp.hpp"
#include "taylormlp/taylor.hpp"

namespace taylormlp {

// Probabilities are floored here before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

Vector softmax(std::span<const double> logits);

// KL(softmax(p_logits) || softmax(q_logits)) in nats; never negative.
double kl_divergence(std::span<const double> p_logits, std::span<const double> q_logits);

struct BenchResult {
  int order = 0;
  std::size_t k = 0;
  std::uint64_t plain_flops = 0;
  std::uint64_t taylor_flops = 0;
  double plain_wall = 0.0;   // seconds per forward, median over repetitions
  double taylor_wall = 0.0;  // seconds per forward, median over repetitions
  double kl_divergence = 0.0;
  double max_abs_err = 0.0;

  double wall_ratio() const { return plain_wall > 0.0 ? taylor_wall / plain_wall : 0.0; }
};

double median(std::vector<double> samples);

// Times the plain and Taylor forward passes over `batch` on the serial
// kernels. Each repetition runs the whole batch through both paths; the
// first `warmup` repetitions are discarded. Requires repetitions >= 5 and a
// non-empty batch (ContractError otherwise).
BenchResult measure_latency(const MlpWeights& weights, const TaylorPackage& pkg,
                            std::span<const Vector> batch, int repetitions, int warmup = 2);

// For each order: transform, then mean KL(plain || taylor) and the largest
// absolute output deviation over eval_batch. FLOP fields are filled; wall
// fields are left at zero. Orders must be non-empty and ascending.
std::vector<BenchResult> divergence_curve(const MlpWeights& weights, const ProtectionPlan& plan,
                                          std::span<const int> orders,
                                          std::span<const Vector> eval_batch);

// Tab-separated table with a header line.
std::string format_bench_table(std::span<const BenchResult> rows);

}  // namespace taylormlp
