#pragma once

// Desk-scale reference setup shared by the tests: a 32 -> 128 -> 32 block,
// weights drawn with scale 0.35, 4096 standard-normal calibration inputs and
// a quarter of the intermediate columns protected.

#include <cstdint>
#include <random>
#include <vector>

#include "taylormlp/calibration.hpp"
#include "taylormlp/mlp.hpp"

namespace fixture {

using namespace taylormlp;

inline constexpr MlpShape kShape{32, 128, 32};
inline constexpr double kWeightScale = 0.35;
inline constexpr std::size_t kCalibrationSamples = 4096;
inline constexpr std::size_t kProtected = 32;

inline std::vector<Vector> gaussian_inputs(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Vector> xs(n, Vector(dim));
  for (auto& x : xs) {
    for (double& v : x) v = normal(rng);
  }
  return xs;
}

inline bool in_hull(const MlpWeights& w, const CalibrationStats& s, const Vector& x) {
  Vector z(w.d_intermediate());
  matvec(w.V, x, z, Exec::serial);
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z[j] > s.z_max[j] || z[j] < s.z_min[j]) return false;
  }
  return true;
}

struct Setup {
  MlpWeights weights;
  CalibrationStats stats;
  std::vector<Vector> eval;  // fresh inputs inside the calibration hull
};

inline Setup reference(ActivationKind kind, std::uint64_t seed, std::size_t eval_count = 256) {
  Setup s;
  s.weights = random_weights(kShape, kind, seed, {kWeightScale, 0.1});
  std::mt19937_64 rng(seed * 7919 + 1);
  s.stats = observe_batch(s.weights, gaussian_inputs(kCalibrationSamples, kShape.d_model, rng));
  while (s.eval.size() < eval_count) {
    auto x = gaussian_inputs(1, kShape.d_model, rng)[0];
    if (in_hull(s.weights, s.stats, x)) s.eval.push_back(std::move(x));
  }
  return s;
}

}  // namespace fixture
