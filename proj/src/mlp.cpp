#include "taylormlp/mlp.hpp"

#include <cmath>
#include <random>

#include "taylormlp/errors.hpp"

namespace taylormlp {

void MlpWeights::validate() const {
  if (V.rows() == 0 || V.cols() == 0 || W.rows() == 0) {
    throw ContractError("MLP weights must have nonzero dimensions");
  }
  if (b.size() != V.rows()) throw ContractError("b length must equal d_intermediate");
  if (W.cols() != V.rows()) throw ContractError("W columns must equal d_intermediate");
  if (c.size() != W.rows()) throw ContractError("c length must equal d_out");
  if (!all_finite(V.data()) || !all_finite(b) || !all_finite(W.data()) || !all_finite(c)) {
    throw ContractError("MLP weights contain non-finite entries");
  }
}

MlpWeights random_weights(const MlpShape& shape, ActivationKind kind, std::uint64_t seed,
                          const InitOptions& opts) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MlpWeights w{Matrix(shape.d_intermediate, shape.d_model), Vector(shape.d_intermediate),
               Matrix(shape.d_out, shape.d_intermediate), Vector(shape.d_out), kind};
  const double v_std = opts.weight_scale / std::sqrt(static_cast<double>(shape.d_model));
  const double w_std = opts.weight_scale / std::sqrt(static_cast<double>(shape.d_intermediate));
  for (double& e : w.V.data()) e = v_std * normal(rng);
  for (double& e : w.b) e = opts.bias_scale * normal(rng);
  for (double& e : w.W.data()) e = w_std * normal(rng);
  for (double& e : w.c) e = opts.bias_scale * normal(rng);
  return w;
}

ForwardTrace mlp_forward(const MlpWeights& weights, std::span<const double> x, Exec exec) {
  if (x.size() != weights.d_model()) throw ContractError("input length must equal d_model");
  ForwardTrace t;
  t.x.assign(x.begin(), x.end());
  t.z.resize(weights.d_intermediate());
  matvec(weights.V, x, t.z, exec);
  t.a.resize(t.z.size());
  for (std::size_t j = 0; j < t.z.size(); ++j) {
    t.a[j] = activation_value(weights.activation, t.z[j] + weights.b[j]);
  }
  t.y.resize(weights.d_out());
  matvec(weights.W, t.a, t.y, exec);
  for (std::size_t i = 0; i < t.y.size(); ++i) t.y[i] += weights.c[i];
  return t;
}

MlpGradients mlp_backward(const MlpWeights& weights, const ForwardTrace& trace,
                          std::span<const double> dy) {
  if (dy.size() != weights.d_out() || trace.a.size() != weights.d_intermediate() ||
      trace.x.size() != weights.d_model()) {
    throw ContractError("mlp_backward shape mismatch");
  }
  MlpGradients g{Matrix(weights.V.rows(), weights.V.cols()), Vector(weights.b.size()),
                 Matrix(weights.W.rows(), weights.W.cols()), Vector(dy.begin(), dy.end()),
                 Vector(weights.d_model())};
  add_outer(g.dW, 1.0, dy, trace.a);

  Vector da(weights.d_intermediate());
  matvec_transposed(weights.W, dy, da);
  for (std::size_t j = 0; j < da.size(); ++j) {
    g.db[j] = da[j] * derivative(weights.activation, 1, trace.z[j] + weights.b[j]);
  }
  add_outer(g.dV, 1.0, g.db, trace.x);
  matvec_transposed(weights.V, g.db, g.dx);
  return g;
}

}  // namespace taylormlp
