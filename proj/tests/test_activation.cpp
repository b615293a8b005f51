#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "taylormlp/activation.hpp"
#include "taylormlp/errors.hpp"

using namespace taylormlp;

namespace {

std::vector<double> grid() {
  std::vector<double> xs;
  for (int i = -40; i <= 40; ++i) xs.push_back(i / 10.0);
  return xs;
}

}  // namespace

TEST_CASE("activation values") {
  CHECK(activation_value(ActivationKind::gelu, 0.0) == 0.0);
  CHECK(activation_value(ActivationKind::silu, 0.0) == 0.0);
  // 0.1 * Phi(0.1), high-precision reference
  CHECK(activation_value(ActivationKind::gelu, 0.1) == doctest::Approx(0.05398278372770290).epsilon(1e-14));
  CHECK(activation_value(ActivationKind::gelu, 0.1) == doctest::Approx(oracle::gelu(0.1)).epsilon(1e-14));
  CHECK(activation_value(ActivationKind::silu, 1.3) == doctest::Approx(oracle::silu(1.3)).epsilon(1e-14));
  for (double x : grid()) {
    CHECK(derivative(ActivationKind::gelu, 0, x) == activation_value(ActivationKind::gelu, x));
    CHECK(derivative(ActivationKind::silu, 0, x) == activation_value(ActivationKind::silu, x));
  }
}

TEST_CASE("non-finite input is a domain error") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(activation_value(ActivationKind::gelu, nan), DomainError);
  CHECK_THROWS_AS(activation_value(ActivationKind::silu, inf), DomainError);
  CHECK_THROWS_AS(gelu_helper(3, -inf), DomainError);
  CHECK_THROWS_AS(silu_derivative(2, nan), DomainError);
}

TEST_CASE("order range is checked") {
  CHECK_THROWS_AS(gelu_helper(-2, 0.0), ContractError);
  CHECK_THROWS_AS(gelu_derivative(-1, 0.0), ContractError);
  CHECK_THROWS_AS(silu_helper(kMaxOrder + 1, 0.0), ContractError);
  CHECK_NOTHROW(silu_derivative(kMaxOrder, 0.3));
}

TEST_CASE("gelu helper examples") {
  CHECK(gelu_helper(0, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(gelu_helper(1, 0.0) == 0.0);
  CHECK(gelu_helper(2, 0.0) == doctest::Approx(-0.3989422804014327).epsilon(1e-15));
  CHECK(gelu_helper(-1, 0.7) == doctest::Approx(oracle::normal_cdf(0.7)).epsilon(1e-15));
  // sixth derivative of the normal density at -1.3
  CHECK(gelu_helper(6, -1.3) == doctest::Approx(3.947528470716185).epsilon(1e-12));
  // h_2 = (x^2 - 1) h_0
  for (double x : grid()) {
    CHECK(gelu_helper(2, x) == doctest::Approx((x * x - 1.0) * gelu_helper(0, x)).epsilon(1e-13));
  }
}

TEST_CASE("gelu derivative examples") {
  CHECK(gelu_derivative(1, 0.0) == 0.5);
  CHECK(gelu_derivative(2, 0.0) == doctest::Approx(0.7978845608028654).epsilon(1e-15));
  CHECK(gelu_derivative(1, 0.5) == doctest::Approx(0.8674951246561628).epsilon(1e-14));
  CHECK(gelu_derivative(3, 1.5) == doctest::Approx(-0.3399836886229658).epsilon(1e-13));
  const auto fd = oracle::richardson_derivative([](double x) { return gelu_derivative(2, x); }, 1.5);
  CHECK(gelu_derivative(3, 1.5) == doctest::Approx(fd.value).epsilon(1e-9));
  // gelu'' = 2 phi + x phi'
  const double x = -0.8;
  CHECK(gelu_derivative(2, x) == doctest::Approx(2 * gelu_helper(0, x) + x * gelu_helper(1, x)).epsilon(1e-14));
}

TEST_CASE("silu helper examples") {
  CHECK(silu_helper(0, 0.0) == 0.5);
  CHECK(silu_helper(1, 0.0) == 0.25);
  // sigma'' = sigma (1 - sigma)(1 - 2 sigma) vanishes at 0
  CHECK(silu_helper(2, 0.0) == 0.0);
  CHECK(silu_helper(5, 0.7) == doctest::Approx(0.05485300273623122).epsilon(1e-12));

  // Folding the k = n-1 term into -sigma instead gives
  // h_n = -sum_{k=0}^{n-1} C(n-1, k) h_k h_{n-1-k}. At n = 2, x = 0 that gives
  // -(h_0 h_1 + h_1 h_0) = -1/4, which contradicts sigma''(0) = 0.
  const double h0 = 0.5, h1 = 0.25;
  const double printed = -(h0 * h1 + h1 * h0);
  CHECK(printed == -0.25);
  CHECK(silu_helper(2, 0.0) != printed);
}

TEST_CASE("silu derivative examples") {
  CHECK(silu_derivative(1, 0.0) == 0.5);
  CHECK(silu_derivative(2, 0.0) == 0.5);
  CHECK(silu_derivative(4, -2.0) == doctest::Approx(0.1969748604897304).epsilon(1e-12));
  const auto fd = oracle::richardson_derivative([](double x) { return silu_derivative(3, x); }, -2.0);
  CHECK(silu_derivative(4, -2.0) == doctest::Approx(fd.value).epsilon(1e-9));
}

TEST_CASE("derivatives agree with finite differences of the previous order") {
  const auto start = std::chrono::steady_clock::now();
  for (auto kind : {ActivationKind::gelu, ActivationKind::silu}) {
    for (int n = 1; n <= 10; ++n) {
      for (double x : grid()) {
        const auto fd = oracle::richardson_derivative([&](double t) { return derivative(kind, n - 1, t); }, x);
        const double got = derivative(kind, n, x);
        INFO(to_string(kind), " n=", n, " x=", x, " got=", got, " fd=", fd.value);
        CHECK(oracle::close(got, fd.value, 1e-6, 1e-10));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 5.0);
}

TEST_CASE("helper rows are derivatives of the row below") {
  for (int n = 1; n <= 10; ++n) {
    for (double x : grid()) {
      const auto fd_g = oracle::richardson_derivative([&](double t) { return gelu_helper(n - 1, t); }, x);
      CHECK(oracle::close(gelu_helper(n, x), fd_g.value, 1e-7, 1e-10));
      const auto fd_s = oracle::richardson_derivative([&](double t) { return silu_helper(n - 1, t); }, x);
      CHECK(oracle::close(silu_helper(n, x), fd_s.value, 1e-7, 1e-10));
    }
  }
}

TEST_CASE("helper parity") {
  for (int n = 0; n <= 12; ++n) {
    const double sign = n % 2 == 0 ? 1.0 : -1.0;
    for (double x : grid()) {
      const double g = gelu_helper(n, x);
      CHECK(gelu_helper(n, -x) == doctest::Approx(sign * g).epsilon(1e-12).scale(1e-12));
      if (n >= 1) {
        // sigma - 1/2 is odd, so odd derivatives are even and even ones odd.
        const double s = silu_helper(n, x);
        CHECK(silu_helper(n, -x) == doctest::Approx(-sign * s).epsilon(1e-9).scale(1e-9));
      }
    }
  }
}

TEST_CASE("derivative_row matches the pointwise functions") {
  std::vector<double> row(kMaxOrder + 1);
  for (auto kind : {ActivationKind::gelu, ActivationKind::silu}) {
    for (double x : {-3.7, -0.2, 0.0, 1.1, 3.9}) {
      derivative_row(kind, kMaxOrder, x, row);
      for (int n = 0; n <= kMaxOrder; ++n) CHECK(row[n] == derivative(kind, n, x));
    }
  }
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(derivative_row(ActivationKind::gelu, 4, 0.0, wrong), ContractError);
}

TEST_CASE("derivative table") {
  const auto xs = grid();
  for (auto kind : {ActivationKind::gelu, ActivationKind::silu}) {
    DerivativeTable table(kind, 8, xs);
    CHECK(table.point_count() == xs.size());
    for (int n = 0; n <= 8; ++n) {
      const auto h = table.helper_row(n);
      const auto d = table.derivative_row(n);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const double want_h = kind == ActivationKind::gelu ? gelu_helper(n, xs[j]) : silu_helper(n, xs[j]);
        CHECK(h[j] == doctest::Approx(want_h).epsilon(1e-13).scale(1e-13));
        CHECK(d[j] == doctest::Approx(derivative(kind, n, xs[j])).epsilon(1e-13).scale(1e-13));
      }
    }
    CHECK_THROWS_AS(table.helper_row(9), ContractError);
  }
  DerivativeTable g(ActivationKind::gelu, 2, xs);
  CHECK(g.helper_row(-1)[40] == 0.5);
}

TEST_CASE("factorials are exact") {
  const auto& f = factorials();
  CHECK(f[0] == 1.0);
  CHECK(f[10] == 3628800.0);
  CHECK(f[16] == 20922789888000.0);
}

TEST_CASE("activation names") {
  CHECK(parse_activation("GELU") == ActivationKind::gelu);
  CHECK(parse_activation("silu") == ActivationKind::silu);
  CHECK_THROWS_AS(parse_activation("relu"), ContractError);
}
