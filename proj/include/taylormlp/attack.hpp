#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "taylormlp/calibration.hpp"
#include "taylormlp/mlp.hpp"
#include "taylormlp/taylor.hpp"

namespace taylormlp {

// Synthetic classification task: x ~ N(0, I), label = argmax of a hidden
// rule network's output, with a seeded fraction of labels replaced at random.
struct ToyTaskSpec {
  std::uint64_t seed = 0;
  std::size_t sample_count = 2000;
  double train_fraction = 0.5;
  double label_noise = 0.1;
};

struct ToyTask {
  ToyTaskSpec spec;
  std::size_t input_dim = 0;
  std::size_t class_count = 0;
  std::vector<Vector> train_x;
  std::vector<std::size_t> train_y;
  std::vector<Vector> test_x;
  std::vector<std::size_t> test_y;
};

ToyTask make_toy_task(const MlpWeights& rule, const ToyTaskSpec& spec);

std::size_t argmax(std::span<const double> v);

// Fraction of samples whose argmax output matches the label.
double accuracy(const MlpWeights& weights, std::span<const Vector> xs,
                std::span<const std::size_t> labels);
double accuracy(const TaylorPackage& pkg, std::span<const Vector> xs,
                std::span<const std::size_t> labels);

// Plain minibatch gradient descent. Defaults are the standard attack
// settings: learning rate 1e-5, 10 fine-tuning epochs, minibatches of 64.
struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  // When false the student keeps the true protected weights (control arm).
  bool reinitialize = true;
};

enum class AttackKind { finetune, distill };

struct AttackReport {
  AttackKind kind = AttackKind::finetune;
  int epochs = 0;
  std::size_t protected_count = 0;
  double initial_task_metric = 0.0;
  // Test accuracy (finetune) or mean KL(teacher || student) in nats (distill).
  double final_task_metric = 0.0;
  // ||recovered - true|| / ||true|| over the withheld parameters only.
  double weight_recovery_error = 0.0;
  std::vector<double> loss_curve;  // mean training loss per completed epoch
  // Loss went non-finite; the curve and the scored weights stop at the last
  // finite epoch.
  bool failed = false;

  friend bool operator==(const AttackReport&, const AttackReport&) = default;
};

// Reinitializes b and W on the protected columns (and c under full
// protection), keeps V and the unprotected columns at their true values, and
// fine-tunes the withheld parameters on the task's labels with softmax
// cross-entropy.
AttackReport finetune_attack(const MlpWeights& true_weights, const ProtectionPlan& plan,
                             const ToyTask& task, const TrainConfig& config);

// Builds a student from what the package releases (V, unprotected columns,
// clear bias) with reinitialized protected parameters and trains it to match
// the package's softmaxed outputs on `corpus`. The true weights are used only
// to score recovery and for the reinitialize = false control.
AttackReport distill_attack(const TaylorPackage& teacher, const MlpWeights& true_weights,
                            std::span<const Vector> corpus, std::span<const Vector> eval_batch,
                            const TrainConfig& config);

// One "key=value" per line; loss_curve is comma separated. Reals use %.17g.
std::string format_report(const AttackReport& report);
std::string_view to_string(AttackKind kind);

}  // namespace taylormlp
