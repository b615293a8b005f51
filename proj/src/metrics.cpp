#include "taylormlp/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "taylormlp/errors.hpp"

namespace taylormlp {

namespace {

template <typename T>
void keep(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

}  // namespace

Vector softmax(std::span<const double> logits) {
  Vector p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= sum;
  return p;
}

double kl_divergence(std::span<const double> p_logits, std::span<const double> q_logits) {
  if (p_logits.size() != q_logits.size()) throw ContractError("KL operands differ in length");
  const Vector p = softmax(p_logits);
  const Vector q = softmax(q_logits);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], kProbabilityFloor);
    const double qi = std::max(q[i], kProbabilityFloor);
    kl += p[i] * (std::log(pi) - std::log(qi));
  }
  // Each term can be slightly negative; the sum is non-negative up to rounding.
  return std::max(kl, 0.0);
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw ContractError("median of an empty sample");
  const auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  if (samples.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(samples.begin(), mid);
  return 0.5 * (lower + upper);
}

BenchResult measure_latency(const MlpWeights& weights, const TaylorPackage& pkg,
                            std::span<const Vector> batch, int repetitions, int warmup) {
  if (batch.empty()) throw ContractError("latency batch is empty");
  if (repetitions < 5) throw ContractError("latency needs at least 5 repetitions");
  if (warmup < 0) throw ContractError("warmup must be non-negative");

  using clock = std::chrono::steady_clock;
  const double per = 1.0 / static_cast<double>(batch.size());
  std::vector<double> plain_times, taylor_times;
  for (int rep = 0; rep < warmup + repetitions; ++rep) {
    const auto t0 = clock::now();
    for (const auto& x : batch) {
      auto trace = mlp_forward(weights, x, Exec::serial);
      keep(trace.y);
    }
    const auto t1 = clock::now();
    for (const auto& x : batch) {
      auto trace = taylor_forward(pkg, x, Exec::serial);
      keep(trace.y);
    }
    const auto t2 = clock::now();
    if (rep < warmup) continue;
    plain_times.push_back(std::chrono::duration<double>(t1 - t0).count() * per);
    taylor_times.push_back(std::chrono::duration<double>(t2 - t1).count() * per);
  }

  BenchResult r;
  r.order = pkg.order;
  r.k = pkg.k();
  r.plain_flops = flop_count(pkg, FlopMode::plain);
  r.taylor_flops = flop_count(pkg, FlopMode::taylor);
  r.plain_wall = median(std::move(plain_times));
  r.taylor_wall = median(std::move(taylor_times));
  return r;
}

std::vector<BenchResult> divergence_curve(const MlpWeights& weights, const ProtectionPlan& plan,
                                          std::span<const int> orders,
                                          std::span<const Vector> eval_batch) {
  if (orders.empty()) throw ContractError("divergence curve needs at least one order");
  if (!std::is_sorted(orders.begin(), orders.end())) throw ContractError("orders must be ascending");
  if (eval_batch.empty()) throw ContractError("evaluation batch is empty");

  std::vector<Vector> plain;
  plain.reserve(eval_batch.size());
  for (const auto& x : eval_batch) plain.push_back(mlp_forward(weights, x).y);

  std::vector<BenchResult> out;
  for (int n : orders) {
    const TaylorPackage pkg = transform(weights, plan, n);
    BenchResult r;
    r.order = n;
    r.k = pkg.k();
    r.plain_flops = flop_count(pkg, FlopMode::plain);
    r.taylor_flops = flop_count(pkg, FlopMode::taylor);
    double kl_sum = 0.0;
    for (std::size_t s = 0; s < eval_batch.size(); ++s) {
      const Vector y = taylor_forward(pkg, eval_batch[s]).y;
      kl_sum += kl_divergence(plain[s], y);
      for (std::size_t i = 0; i < y.size(); ++i) {
        r.max_abs_err = std::max(r.max_abs_err, std::abs(y[i] - plain[s][i]));
      }
    }
    r.kl_divergence = kl_sum / static_cast<double>(eval_batch.size());
    out.push_back(r);
  }
  return out;
}

std::string format_bench_table(std::span<const BenchResult> rows) {
  std::string out = "order\tK\tplain_macs\ttaylor_macs\tmac_ratio\tplain_wall_s\ttaylor_wall_s\twall_ratio\tkl\tmax_abs_err\n";
  char buf[512];
  for (const auto& r : rows) {
    const double mac_ratio = r.plain_flops ? static_cast<double>(r.taylor_flops) / static_cast<double>(r.plain_flops) : 0.0;
    std::snprintf(buf, sizeof buf, "%d\t%zu\t%llu\t%llu\t%.4f\t%.6e\t%.6e\t%.3f\t%.6e\t%.6e\n", r.order,
                  r.k, static_cast<unsigned long long>(r.plain_flops),
                  static_cast<unsigned long long>(r.taylor_flops), mac_ratio, r.plain_wall,
                  r.taylor_wall, r.wall_ratio(), r.kl_divergence, r.max_abs_err);
    out += buf;
  }
  return out;
}

}  // namespace taylormlp
