#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "taylormlp/errors.hpp"
#include "taylormlp/metrics.hpp"

using namespace taylormlp;

TEST_CASE("softmax is stable and normalized") {
  const auto p = softmax(Vector{1000.0, 1000.0, -1000.0});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
  const auto q = softmax(Vector{1.0, 2.0, 3.0});
  CHECK(q[0] + q[1] + q[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q[2] == doctest::Approx(0.6652409557748219).epsilon(1e-14));
}

TEST_CASE("kl divergence") {
  CHECK(kl_divergence(Vector{0.3, -1.0, 2.0}, Vector{0.3, -1.0, 2.0}) == 0.0);
  // shifting every logit leaves the distribution unchanged
  CHECK(kl_divergence(Vector{0.3, -1.0, 2.0}, Vector{5.3, 4.0, 7.0}) == doctest::Approx(0.0).epsilon(1e-15));
  // KL([e/(1+e), 1/(1+e)] || [1/2, 1/2])
  const double p = std::exp(1.0) / (1.0 + std::exp(1.0));
  const double want = p * std::log(2 * p) + (1 - p) * std::log(2 * (1 - p));
  CHECK(kl_divergence(Vector{1.0, 0.0}, Vector{0.0, 0.0}) == doctest::Approx(want).epsilon(1e-14));
  // q underflows to zero: floored instead of infinite
  const double big = kl_divergence(Vector{0.0, 0.0}, Vector{0.0, -2000.0});
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(0.5 * std::log(0.5) + 0.5 * std::log(0.5 / kProbabilityFloor)).epsilon(1e-6));
  CHECK_THROWS_AS(kl_divergence(Vector{1.0}, Vector{1.0, 2.0}), ContractError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    Vector a(7), b(7);
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = normal(rng);
    CHECK(kl_divergence(a, b) >= 0.0);
  }
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), ContractError);
}

TEST_CASE("latency measurement") {
  const auto setup = fixture::reference(ActivationKind::gelu, 2, 8);
  const auto plan = select_protected_columns(setup.stats, 32, ActivationKind::gelu);
  const auto pkg = transform(setup.weights, plan, 4);
  const auto r = measure_latency(setup.weights, pkg, setup.eval, 5);
  CHECK(r.order == 4);
  CHECK(r.k == 32);
  CHECK(r.plain_wall > 0.0);
  CHECK(r.taylor_wall > 0.0);
  CHECK(r.plain_flops == flop_count(setup.weights));
  CHECK(r.taylor_flops == flop_count(pkg, FlopMode::taylor));
  CHECK(r.wall_ratio() > 0.0);
  CHECK_THROWS_AS(measure_latency(setup.weights, pkg, setup.eval, 4), ContractError);
  CHECK_THROWS_AS(measure_latency(setup.weights, pkg, std::span<const Vector>{}, 5), ContractError);
}

TEST_CASE("divergence curve decreases on the reference block") {
  for (auto kind : {ActivationKind::gelu, ActivationKind::silu}) {
    const auto setup = fixture::reference(kind, 1);
    const auto plan = select_protected_columns(setup.stats, fixture::kProtected, kind);
    const std::vector<int> orders{0, 2, 4, 6, 8};
    const auto curve = divergence_curve(setup.weights, plan, orders, setup.eval);
    REQUIRE(curve.size() == 5);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      CHECK(curve[i].order == orders[i]);
      CHECK(curve[i].kl_divergence >= 0.0);
      CHECK(curve[i].plain_wall == 0.0);
      if (i > 0) {
        CHECK(curve[i].kl_divergence < curve[i - 1].kl_divergence);
        CHECK(curve[i].taylor_flops > curve[i - 1].taylor_flops);
      }
    }
    CHECK(curve.back().kl_divergence <= 1e-4);
  }
}

TEST_CASE("divergence vanishes at the expansion point") {
  const auto w = random_weights({5, 9, 4}, ActivationKind::silu, 3);
  const Vector x{0.2, -0.7, 1.1, 0.0, 0.4};
  const auto stats = observe(CalibrationStats::empty(9), w, x);
  const auto plan = select_protected_columns(stats, 9, ActivationKind::silu);
  const std::vector<int> orders{0, 3};
  const std::vector<Vector> batch{x};
  for (const auto& r : divergence_curve(w, plan, orders, batch)) {
    CHECK(r.kl_divergence <= 1e-15);
    CHECK(r.max_abs_err <= 1e-12);
  }
  const std::vector<int> unsorted{3, 1};
  CHECK_THROWS_AS(divergence_curve(w, plan, unsorted, batch), ContractError);
}

TEST_CASE("bench table") {
  BenchResult r;
  r.order = 2;
  r.k = 8;
  r.plain_flops = 76;
  r.taylor_flops = 100;
  const std::vector<BenchResult> rows{r};
  const auto table = format_bench_table(rows);
  CHECK(table.find("order\t") == 0);
  CHECK(table.find("\n2\t8\t76\t100\t") != std::string::npos);
}

TEST_CASE("order zero costs about the same as the plain block") {
  const auto setup = fixture::reference(ActivationKind::gelu, 6, 64);
  const auto plan = select_protected_columns(setup.stats, fixture::kShape.d_intermediate, ActivationKind::gelu);
  const auto pkg = transform(setup.weights, plan, 0);
  const auto r = measure_latency(setup.weights, pkg, setup.eval, 7);
  INFO("plain ", r.plain_wall, " taylor ", r.taylor_wall);
  CHECK(r.wall_ratio() <= 1.5);
  CHECK(r.taylor_flops <= r.plain_flops);
}
