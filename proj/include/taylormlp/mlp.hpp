#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "taylormlp/activation.hpp"
#include "taylormlp/linalg.hpp"

namespace taylormlp {

// One feed-forward block: y = W * Act(V x + b) + c.
struct MlpWeights {
  Matrix V;  // [d_intermediate x d_model]
  Vector b;  // [d_intermediate]
  Matrix W;  // [d_out x d_intermediate]
  Vector c;  // [d_out]
  ActivationKind activation = ActivationKind::gelu;

  std::size_t d_model() const { return V.cols(); }
  std::size_t d_intermediate() const { return V.rows(); }
  std::size_t d_out() const { return W.rows(); }

  // Throws ContractError on inconsistent shapes or non-finite entries.
  void validate() const;

  friend bool operator==(const MlpWeights&, const MlpWeights&) = default;
};

struct MlpShape {
  std::size_t d_model = 0;
  std::size_t d_intermediate = 0;
  std::size_t d_out = 0;
};

// Seeded weights: V and W entries ~ N(0, scale^2 / fan_in), biases ~ N(0, bias_scale^2).
struct InitOptions {
  double weight_scale = 1.0;
  double bias_scale = 0.1;
};
MlpWeights random_weights(const MlpShape& shape, ActivationKind kind, std::uint64_t seed,
                          const InitOptions& opts = {});

struct ForwardTrace {
  Vector x;
  Vector z;  // V x, before the bias
  Vector a;  // Act(z + b)
  Vector y;
};

ForwardTrace mlp_forward(const MlpWeights& weights, std::span<const double> x,
                         Exec exec = Exec::parallel);

struct MlpGradients {
  Matrix dV;
  Vector db;
  Matrix dW;
  Vector dc;
  Vector dx;
};

// Backpropagates an upstream gradient dy = dL/dy through one forward trace.
MlpGradients mlp_backward(const MlpWeights& weights, const ForwardTrace& trace,
                          std::span<const double> dy);

}  // namespace taylormlp
