#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace taylormlp {

enum class ActivationKind { gelu, silu };

std::string_view to_string(ActivationKind kind);
// Accepts "gelu" / "silu" (case-insensitive). Throws ContractError otherwise.
ActivationKind parse_activation(std::string_view name);

// Largest expansion order whose factorial is an exact double.
inline constexpr int kMaxOrder = 16;

// n! for n in [0, kMaxOrder], exact in double precision (16! < 2^53).
const std::array<double, kMaxOrder + 1>& factorials();

// gelu(x) = x * Phi(x), silu(x) = x * sigmoid(x). Throws DomainError on
// non-finite x.
double activation_value(ActivationKind kind, double x);

double normal_cdf(double x);
double sigmoid(double x);

// n-th derivative of the standard normal density phi(x) for n >= 0, and
// Phi(x) for n == -1. Rows are built by the three-term recurrence
//   h_n = -x h_{n-1} - (n-1) h_{n-2},  h_0 = phi(x),  h_1 = -x phi(x).
double gelu_helper(int n, double x);

// gelu^(n)(x) = x h_{n-1}(x) + n h_{n-2}(x), with h_{-1} = Phi so that the
// first derivative comes out as Phi(x) + x phi(x).
double gelu_derivative(int n, double x);

// n-th derivative of the logistic sigmoid. Built from
//   h_n = h_{n-1} (1 - h_0) - sum_{k=0}^{n-2} C(n-1, k) h_k h_{n-1-k},
// the Leibniz expansion of (sigma (1 - sigma))^(n-1). The k = n-1 term keeps
// (1 - sigma) undifferentiated; folding it into -sigma like the other terms
// would give sigma''(0) = -1/4 instead of 0.
double silu_helper(int n, double x);

// silu^(n)(x) = x h_n(x) + n h_{n-1}(x).
double silu_derivative(int n, double x);

// Dispatches to gelu_derivative / silu_derivative; n == 0 is the value.
double derivative(ActivationKind kind, int n, double x);

// All derivatives of orders 0..max_order at x, out[n] = Act^(n)(x).
// One recurrence pass; the hot path used by the Taylor transform.
void derivative_row(ActivationKind kind, int max_order, double x,
                    std::span<double> out);

// Helper rows h_0..h_N over a point set. Row n is the n-th derivative of the
// generating function (phi for GELU, sigmoid for SiLU), filled from lower
// rows only.
class DerivativeTable {
 public:
  DerivativeTable(ActivationKind kind, int max_order, std::span<const double> points);

  ActivationKind kind() const { return kind_; }
  int max_order() const { return max_order_; }
  std::size_t point_count() const { return points_.size(); }

  std::span<const double> helper_row(int n) const;
  // Act^(n) at every point, assembled from the helper rows.
  std::vector<double> derivative_row(int n) const;

 private:
  ActivationKind kind_;
  int max_order_;
  std::vector<double> points_;
  // GELU stores an extra leading row for h_{-1} = Phi.
  std::vector<double> rows_;
  std::size_t row_offset_;
};

}  // namespace taylormlp
