#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "taylormlp/activation.hpp"
#include "taylormlp/calibration.hpp"
#include "taylormlp/linalg.hpp"
#include "taylormlp/mlp.hpp"

namespace taylormlp {

// The released form of an MLP block. Protected columns carry only their
// expansion center and the coefficient tensor theta; b, W and (under full
// protection) c never appear for them.
struct TaylorPackage {
  ActivationKind activation = ActivationKind::gelu;
  int order = 0;
  Matrix V;                                  // [d_intermediate x d_model], in clear
  std::vector<std::size_t> protected_idx;    // ascending, size K
  Vector z0;                                 // [K]
  std::size_t d_out = 0;
  Vector theta;                              // [d_out][order + 1][K], row-major
  std::vector<std::size_t> unprotected_idx;  // ascending complement
  Matrix residual_W;                         // [d_out x (d_intermediate - K)]
  Vector residual_b;                         // [d_intermediate - K]
  Vector c;                                  // [d_out], or empty when folded into theta

  std::size_t k() const { return protected_idx.size(); }
  std::size_t d_model() const { return V.cols(); }
  std::size_t d_intermediate() const { return V.rows(); }
  bool bias_folded() const { return c.empty(); }

  // Coefficients of output row i: order-major, K entries per order.
  std::span<const double> theta_row(std::size_t i) const {
    const std::size_t width = static_cast<std::size_t>(order + 1) * k();
    return {theta.data() + i * width, width};
  }
  double theta_at(std::size_t i, int n, std::size_t j) const {
    return theta[(i * static_cast<std::size_t>(order + 1) + static_cast<std::size_t>(n)) * k() + j];
  }

  // Throws ContractError when the fields do not describe one block.
  void validate() const;

  friend bool operator==(const TaylorPackage&, const TaylorPackage&) = default;
};

// theta[i][n][j] = W[i, p_j] Act^(n)(z0[p_j] + b[p_j]) / n!. Under full
// protection c_i / K is added to every order-0 entry so that summing the
// order-0 slab adds c_i exactly once; otherwise c stays in clear.
// Throws ConfigError when order > kMaxOrder and ContractError when the plan
// does not match the weights.
TaylorPackage transform(const MlpWeights& weights, const ProtectionPlan& plan, int order,
                        Exec exec = Exec::parallel);

struct TaylorForwardTrace {
  Vector x;
  Vector z_p;     // protected pre-activations V_p x
  Vector delta;   // z_p - z0
  Vector powers;  // [order + 1][K]; powers[0] = 1, powers[n] = powers[n-1] * delta
  Vector y;
  // SiLU only: some |delta_j| exceeds kSiluRadiusGuard. Diagnostic, never thrown.
  bool radius_violation = false;
};

TaylorForwardTrace taylor_forward(const TaylorPackage& pkg, std::span<const double> x,
                                  Exec exec = Exec::parallel);

// Multiply-accumulate counts for one forward pass. Each activation evaluation,
// subtraction or bias add counts as one slot. The Taylor path computes the
// power vectors once per input and then spends (order + 1) * K MACs per row.
struct MacCount {
  std::uint64_t projection = 0;        // V x over all intermediate columns
  std::uint64_t protected_part = 0;    // work attributable to protected columns
  std::uint64_t unprotected_part = 0;  // unprotected columns plus the clear bias
  std::uint64_t total() const { return projection + protected_part + unprotected_part; }
};

enum class FlopMode { plain, taylor };

// Plain forward cost split by a hypothetical K-column protection.
MacCount plain_mac_count(const MlpShape& shape, std::size_t protected_k);
MacCount taylor_mac_count(const TaylorPackage& pkg);

std::uint64_t flop_count(const MlpWeights& weights);
// plain: the equivalent unprotected block; taylor: the package's own path.
std::uint64_t flop_count(const TaylorPackage& pkg, FlopMode mode);

}  // namespace taylormlp
