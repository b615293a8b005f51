#include <doctest.h>

#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "taylormlp/errors.hpp"
#include "taylormlp/mlp.hpp"

using namespace taylormlp;

namespace {

std::vector<std::vector<double>> nested(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& e : v) e = normal(rng);
  return v;
}

double half_sq_loss(const MlpWeights& w, const Vector& x, const Vector& target) {
  const Vector y = mlp_forward(w, x, Exec::serial).y;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
  return acc;
}

void check_coordinate(double analytic, double& slot, const std::function<double()>& loss) {
  const double saved = slot;
  const auto fd = oracle::richardson_derivative(
      [&](double t) {
        slot = t;
        const double l = loss();
        slot = saved;
        return l;
      },
      saved);
  slot = saved;
  INFO("analytic=", analytic, " fd=", fd.value);
  CHECK(oracle::close(analytic, fd.value, 1e-5, 1e-9));
}

}  // namespace

TEST_CASE("forward examples") {
  MlpWeights id{Matrix::identity(2), {0, 0}, Matrix::identity(2), {0, 0}, ActivationKind::gelu};
  const auto t = mlp_forward(id, Vector{0.0, 0.0});
  CHECK(t.y == Vector{0.0, 0.0});

  MlpWeights scalar{Matrix::identity(1), {0}, Matrix(1, 1, 1.0), {0.3}, ActivationKind::silu};
  CHECK(mlp_forward(scalar, Vector{0.0}).y == Vector{0.3});
}

TEST_CASE("forward matches a nested-loop re-implementation") {
  for (auto kind : {ActivationKind::gelu, ActivationKind::silu}) {
    const auto w = random_weights({4, 8, 4}, kind, 17);
    const Vector x{0.3, -1.2, 0.8, 2.0};
    const auto t = mlp_forward(w, x);
    const auto want = oracle::mlp(nested(w.V), w.b, nested(w.W), w.c, kind == ActivationKind::gelu, x);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.y[i] == doctest::Approx(want[i]).epsilon(1e-13));
    for (std::size_t i = 0; i < 4; ++i) {
      double acc = w.c[i];
      for (std::size_t j = 0; j < 8; ++j) acc += w.W(i, j) * t.a[j];
      CHECK(t.y[i] == doctest::Approx(acc).epsilon(1e-14));
    }
  }
}

TEST_CASE("serial and parallel forward agree bitwise") {
  const auto w = random_weights({16, 64, 12}, ActivationKind::gelu, 3);
  for (int s = 0; s < 5; ++s) {
    const Vector x = random_vector(16, 100 + s);
    CHECK(mlp_forward(w, x, Exec::serial).y == mlp_forward(w, x, Exec::parallel).y);
  }
}

TEST_CASE("forward is batch-order independent") {
  const auto w = random_weights({6, 10, 6}, ActivationKind::silu, 9);
  std::vector<Vector> xs;
  for (int s = 0; s < 6; ++s) xs.push_back(random_vector(6, 40 + s));
  std::vector<Vector> forward, backward;
  for (const auto& x : xs) forward.push_back(mlp_forward(w, x).y);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) backward.push_back(mlp_forward(w, *it).y);
  for (std::size_t s = 0; s < xs.size(); ++s) CHECK(forward[s] == backward[xs.size() - 1 - s]);
}

TEST_CASE("shape and finiteness contracts") {
  const auto w = random_weights({4, 8, 3}, ActivationKind::gelu, 1);
  CHECK_THROWS_AS(mlp_forward(w, Vector{1.0, 2.0}), ContractError);
  auto bad = w;
  bad.b.pop_back();
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = w;
  bad.W(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), ContractError);
  const auto t = mlp_forward(w, Vector(4, 0.5));
  CHECK_THROWS_AS(mlp_backward(w, t, Vector{1.0}), ContractError);
  CHECK(w.d_out() == 3);
}

TEST_CASE("backward examples") {
  const auto w = random_weights({4, 8, 4}, ActivationKind::gelu, 5);
  const auto t = mlp_forward(w, Vector{0.1, 0.2, 0.3, 0.4});
  const auto g = mlp_backward(w, t, Vector(4, 0.0));
  for (double v : g.dV.data()) CHECK(v == 0.0);
  for (double v : g.dW.data()) CHECK(v == 0.0);
  for (double v : g.db) CHECK(v == 0.0);
  for (double v : g.dc) CHECK(v == 0.0);
  for (double v : g.dx) CHECK(v == 0.0);

  MlpWeights scalar{Matrix(1, 1, 1.0), {0.0}, Matrix(1, 1, 1.0), {0.0}, ActivationKind::gelu};
  const auto ts = mlp_forward(scalar, Vector{0.5});
  const auto gs = mlp_backward(scalar, ts, Vector{1.0});
  // gelu'(0.5), high-precision reference
  CHECK(gs.dx[0] == doctest::Approx(0.8674951246561628).epsilon(1e-14));
}

TEST_CASE("gradients match finite differences on 20 random networks") {
  std::mt19937_64 dims(2024);
  for (int net = 0; net < 20; ++net) {
    const std::size_t d_model = 1 + dims() % 8;
    const std::size_t d_int = 1 + dims() % 16;
    const std::size_t d_out = 1 + dims() % 8;
    const auto kind = net % 2 == 0 ? ActivationKind::gelu : ActivationKind::silu;
    auto w = random_weights({d_model, d_int, d_out}, kind, 500 + net);
    Vector x = random_vector(d_model, 900 + net);
    const Vector target = random_vector(d_out, 1300 + net);

    const auto trace = mlp_forward(w, x, Exec::serial);
    Vector dy(d_out);
    for (std::size_t i = 0; i < d_out; ++i) dy[i] = trace.y[i] - target[i];
    const auto g = mlp_backward(w, trace, dy);
    auto loss = [&] { return half_sq_loss(w, x, target); };

    for (std::size_t k = 0; k < w.V.size(); ++k) check_coordinate(g.dV.data()[k], w.V.data()[k], loss);
    for (std::size_t k = 0; k < w.b.size(); ++k) check_coordinate(g.db[k], w.b[k], loss);
    for (std::size_t k = 0; k < w.W.size(); ++k) check_coordinate(g.dW.data()[k], w.W.data()[k], loss);
    for (std::size_t k = 0; k < w.c.size(); ++k) check_coordinate(g.dc[k], w.c[k], loss);
    for (std::size_t k = 0; k < x.size(); ++k) check_coordinate(g.dx[k], x[k], loss);
  }
}
