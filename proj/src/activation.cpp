#include "taylormlp/activation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "taylormlp/errors.hpp"

namespace taylormlp {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;  // 1/sqrt(2 pi)

void require_finite(double x) {
  if (!std::isfinite(x)) throw DomainError("activation input must be finite");
}

void require_order(int n, int lowest) {
  if (n < lowest || n > kMaxOrder) {
    throw ContractError("derivative order " + std::to_string(n) + " outside [" +
                        std::to_string(lowest) + ", " + std::to_string(kMaxOrder) + "]");
  }
}

// Pascal rows C(m, k) for m <= kMaxOrder, accumulated by addition only.
using PascalTable = std::array<std::array<double, kMaxOrder + 1>, kMaxOrder + 1>;

const PascalTable& pascal() {
  static const PascalTable table = [] {
    PascalTable t{};
    for (int m = 0; m <= kMaxOrder; ++m) {
      t[m][0] = 1.0;
      for (int k = 1; k <= m; ++k) t[m][k] = t[m - 1][k - 1] + (k < m ? t[m - 1][k] : 0.0);
    }
    return t;
  }();
  return table;
}

// h[0..count) for the Gaussian density; h[-1] is written to *phi_cdf.
void gelu_helpers(double x, int count, double* h) {
  h[0] = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  if (count > 1) h[1] = -x * h[0];
  for (int n = 2; n < count; ++n) h[n] = -x * h[n - 1] - (n - 1) * h[n - 2];
}

void silu_helpers(double x, int count, double* h) {
  const double s = sigmoid(x);
  const double one_minus_s = sigmoid(-x);
  h[0] = s;
  if (count > 1) h[1] = s * one_minus_s;
  const auto& c = pascal();
  for (int n = 2; n < count; ++n) {
    double acc = h[n - 1] * one_minus_s;
    for (int k = 0; k <= n - 2; ++k) acc -= c[n - 1][k] * h[k] * h[n - 1 - k];
    h[n] = acc;
  }
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  return kind == ActivationKind::gelu ? "gelu" : "silu";
}

ActivationKind parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "gelu") return ActivationKind::gelu;
  if (lower == "silu") return ActivationKind::silu;
  throw ContractError("unknown activation '" + std::string(name) + "' (expected gelu or silu)");
}

const std::array<double, kMaxOrder + 1>& factorials() {
  static const std::array<double, kMaxOrder + 1> table = [] {
    std::array<double, kMaxOrder + 1> t{};
    t[0] = 1.0;
    for (int n = 1; n <= kMaxOrder; ++n) t[n] = t[n - 1] * n;
    return t;
  }();
  return table;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activation_value(ActivationKind kind, double x) {
  require_finite(x);
  return kind == ActivationKind::gelu ? x * normal_cdf(x) : x * sigmoid(x);
}

double gelu_helper(int n, double x) {
  require_finite(x);
  require_order(n, -1);
  if (n == -1) return normal_cdf(x);
  std::array<double, kMaxOrder + 1> h{};
  gelu_helpers(x, n + 1, h.data());
  return h[n];
}

double gelu_derivative(int n, double x) {
  require_finite(x);
  require_order(n, 0);
  if (n == 0) return activation_value(ActivationKind::gelu, x);
  const double h_nm2 = n == 1 ? normal_cdf(x) : gelu_helper(n - 2, x);
  return x * gelu_helper(n - 1, x) + n * h_nm2;
}

double silu_helper(int n, double x) {
  require_finite(x);
  require_order(n, 0);
  std::array<double, kMaxOrder + 1> h{};
  silu_helpers(x, n + 1, h.data());
  return h[n];
}

double silu_derivative(int n, double x) {
  require_finite(x);
  require_order(n, 0);
  if (n == 0) return activation_value(ActivationKind::silu, x);
  std::array<double, kMaxOrder + 1> h{};
  silu_helpers(x, n + 1, h.data());
  return x * h[n] + n * h[n - 1];
}

double derivative(ActivationKind kind, int n, double x) {
  return kind == ActivationKind::gelu ? gelu_derivative(n, x) : silu_derivative(n, x);
}

void derivative_row(ActivationKind kind, int max_order, double x, std::span<double> out) {
  require_finite(x);
  require_order(max_order, 0);
  if (out.size() != static_cast<std::size_t>(max_order) + 1) {
    throw ContractError("derivative_row output length must be max_order + 1");
  }
  std::array<double, kMaxOrder + 1> h{};
  if (kind == ActivationKind::gelu) {
    const double cdf = normal_cdf(x);
    out[0] = x * cdf;
    if (max_order == 0) return;
    gelu_helpers(x, max_order, h.data());
    out[1] = x * h[0] + cdf;
    for (int n = 2; n <= max_order; ++n) out[n] = x * h[n - 1] + n * h[n - 2];
  } else {
    silu_helpers(x, max_order + 1, h.data());
    out[0] = x * h[0];
    for (int n = 1; n <= max_order; ++n) out[n] = x * h[n] + n * h[n - 1];
  }
}

DerivativeTable::DerivativeTable(ActivationKind kind, int max_order,
                                 std::span<const double> points)
    : kind_(kind), max_order_(max_order), points_(points.begin(), points.end()) {
  require_order(max_order, 0);
  for (double p : points_) require_finite(p);
  row_offset_ = kind == ActivationKind::gelu ? 1 : 0;
  const std::size_t width = points_.size();
  const std::size_t row_count = static_cast<std::size_t>(max_order) + 1 + row_offset_;
  rows_.assign(row_count * width, 0.0);
  auto at = [&](std::size_t row, std::size_t j) -> double& { return rows_[row * width + j]; };

  if (kind == ActivationKind::gelu) {
    for (std::size_t j = 0; j < width; ++j) {
      const double x = points_[j];
      at(0, j) = normal_cdf(x);
      at(1, j) = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      if (max_order >= 1) at(2, j) = -x * at(1, j);
      for (int n = 2; n <= max_order; ++n) {
        at(n + 1, j) = -x * at(n, j) - (n - 1) * at(n - 1, j);
      }
    }
  } else {
    const auto& c = pascal();
    std::vector<double> one_minus(width);
    for (std::size_t j = 0; j < width; ++j) {
      at(0, j) = sigmoid(points_[j]);
      one_minus[j] = sigmoid(-points_[j]);
      if (max_order >= 1) at(1, j) = at(0, j) * one_minus[j];
    }
    for (int n = 2; n <= max_order; ++n) {
      for (std::size_t j = 0; j < width; ++j) {
        double acc = at(n - 1, j) * one_minus[j];
        for (int k = 0; k <= n - 2; ++k) acc -= c[n - 1][k] * at(k, j) * at(n - 1 - k, j);
        at(n, j) = acc;
      }
    }
  }
}

std::span<const double> DerivativeTable::helper_row(int n) const {
  const int lowest = kind_ == ActivationKind::gelu ? -1 : 0;
  if (n < lowest || n > max_order_) throw ContractError("helper row out of range");
  const std::size_t width = points_.size();
  const std::size_t row = static_cast<std::size_t>(n + static_cast<int>(row_offset_));
  return {rows_.data() + row * width, width};
}

std::vector<double> DerivativeTable::derivative_row(int n) const {
  if (n < 0 || n > max_order_) throw ContractError("derivative order out of range");
  std::vector<double> out(points_.size());
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const double x = points_[j];
    if (kind_ == ActivationKind::gelu) {
      out[j] = n == 0 ? x * helper_row(-1)[j] : x * helper_row(n - 1)[j] + n * helper_row(n - 2)[j];
    } else {
      out[j] = n == 0 ? x * helper_row(0)[j] : x * helper_row(n)[j] + n * helper_row(n - 1)[j];
    }
  }
  return out;
}

}  // namespace taylormlp
