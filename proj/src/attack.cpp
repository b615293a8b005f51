#include "taylormlp/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <functional>
#include <limits>
#include <random>

#include "taylormlp/errors.hpp"
#include "taylormlp/metrics.hpp"

namespace taylormlp {

namespace {

// Which parameters the attacker has to recover.
struct Withheld {
  std::vector<std::size_t> cols;
  bool bias = false;  // c is withheld only when every column is protected
};

Withheld withheld_for(std::vector<std::size_t> cols, std::size_t d_int) {
  const bool full = !cols.empty() && cols.size() == d_int;
  return {std::move(cols), full};
}

void reinitialize(MlpWeights& w, const Withheld& h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double b_scale = 1.0 / std::sqrt(static_cast<double>(w.d_model()));
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(w.d_intermediate()));
  for (std::size_t j : h.cols) {
    w.b[j] = b_scale * unit(rng);
    for (std::size_t i = 0; i < w.d_out(); ++i) w.W(i, j) = w_scale * unit(rng);
  }
  if (h.bias) {
    for (double& v : w.c) v = w_scale * unit(rng);
  }
}

Vector withheld_values(const MlpWeights& w, const Withheld& h) {
  Vector out;
  for (std::size_t j : h.cols) {
    out.push_back(w.b[j]);
    for (std::size_t i = 0; i < w.d_out(); ++i) out.push_back(w.W(i, j));
  }
  if (h.bias) out.insert(out.end(), w.c.begin(), w.c.end());
  return out;
}

double recovery_error(const MlpWeights& recovered, const MlpWeights& truth, const Withheld& h) {
  const Vector r = withheld_values(recovered, h);
  const Vector t = withheld_values(truth, h);
  if (t.empty()) return 0.0;
  Vector diff(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) diff[k] = r[k] - t[k];
  const double denom = frobenius_norm(t);
  return denom > 0.0 ? frobenius_norm(diff) / denom : frobenius_norm(diff);
}

// Gradient of the loss with respect to the logits, for one sample.
using LogitGrad = std::function<double(const Vector& y, std::size_t sample, Vector& dy)>;

// Minibatch gradient descent over the withheld parameters only.
void train(MlpWeights& student, const Withheld& h, std::size_t sample_count,
           const std::vector<Vector>& xs, const LogitGrad& loss_grad, const TrainConfig& config,
           std::mt19937_64& rng, AttackReport& report) {
  const std::size_t batch = std::max<std::size_t>(config.batch_size, 1);
  std::vector<std::size_t> order(sample_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vector dy(student.d_out());
  Vector gb(h.cols.size());
  Matrix gW(student.d_out(), h.cols.size());
  Vector gc(student.d_out());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const MlpWeights last_good = student;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    try {
      for (std::size_t start = 0; start < sample_count; start += batch) {
        const std::size_t stop = std::min(start + batch, sample_count);
        std::fill(gb.begin(), gb.end(), 0.0);
        std::fill(gW.data().begin(), gW.data().end(), 0.0);
        std::fill(gc.begin(), gc.end(), 0.0);
        for (std::size_t s = start; s < stop; ++s) {
          const std::size_t idx = order[s];
          const ForwardTrace trace = mlp_forward(student, xs[idx], Exec::serial);
          epoch_loss += loss_grad(trace.y, idx, dy);
          const MlpGradients g = mlp_backward(student, trace, dy);
          for (std::size_t m = 0; m < h.cols.size(); ++m) {
            const std::size_t j = h.cols[m];
            gb[m] += g.db[j];
            for (std::size_t i = 0; i < student.d_out(); ++i) gW(i, m) += g.dW(i, j);
          }
          if (h.bias) {
            for (std::size_t i = 0; i < gc.size(); ++i) gc[i] += g.dc[i];
          }
        }
        const double step = config.learning_rate / static_cast<double>(stop - start);
        for (std::size_t m = 0; m < h.cols.size(); ++m) {
          const std::size_t j = h.cols[m];
          student.b[j] -= step * gb[m];
          for (std::size_t i = 0; i < student.d_out(); ++i) student.W(i, j) -= step * gW(i, m);
        }
        if (h.bias) {
          for (std::size_t i = 0; i < gc.size(); ++i) student.c[i] -= step * gc[i];
        }
      }
    } catch (const DomainError&) {
      // a parameter overflowed mid-epoch
      epoch_loss = std::numeric_limits<double>::quiet_NaN();
    }
    const double mean_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(sample_count, 1));
    if (!std::isfinite(mean_loss) || !all_finite(student.W.data()) || !all_finite(student.b) ||
        !all_finite(student.c)) {
      report.failed = true;
      student = last_good;
      return;
    }
    report.loss_curve.push_back(mean_loss);
  }
}

}  // namespace

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

ToyTask make_toy_task(const MlpWeights& rule, const ToyTaskSpec& spec) {
  rule.validate();
  if (spec.sample_count < 2 || !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ContractError("toy task needs >= 2 samples and a train fraction in (0, 1)");
  }
  ToyTask task;
  task.spec = spec;
  task.input_dim = rule.d_model();
  task.class_count = rule.d_out();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_class(0, task.class_count - 1);

  const auto train_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.sample_count))),
      1, spec.sample_count - 1);
  for (std::size_t s = 0; s < spec.sample_count; ++s) {
    Vector x(task.input_dim);
    for (double& v : x) v = normal(rng);
    std::size_t label = argmax(mlp_forward(rule, x, Exec::serial).y);
    if (coin(rng) < spec.label_noise) label = any_class(rng);
    if (s < train_count) {
      task.train_x.push_back(std::move(x));
      task.train_y.push_back(label);
    } else {
      task.test_x.push_back(std::move(x));
      task.test_y.push_back(label);
    }
  }
  return task;
}

double accuracy(const MlpWeights& weights, std::span<const Vector> xs,
                std::span<const std::size_t> labels) {
  if (xs.size() != labels.size() || xs.empty()) throw ContractError("accuracy needs matching non-empty inputs");
  std::size_t hits = 0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    hits += argmax(mlp_forward(weights, xs[s], Exec::serial).y) == labels[s];
  }
  return static_cast<double>(hits) / static_cast<double>(xs.size());
}

double accuracy(const TaylorPackage& pkg, std::span<const Vector> xs,
                std::span<const std::size_t> labels) {
  if (xs.size() != labels.size() || xs.empty()) throw ContractError("accuracy needs matching non-empty inputs");
  std::size_t hits = 0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    hits += argmax(taylor_forward(pkg, xs[s], Exec::serial).y) == labels[s];
  }
  return static_cast<double>(hits) / static_cast<double>(xs.size());
}

AttackReport finetune_attack(const MlpWeights& true_weights, const ProtectionPlan& plan,
                             const ToyTask& task, const TrainConfig& config) {
  true_weights.validate();
  if (task.input_dim != true_weights.d_model() || task.class_count != true_weights.d_out()) {
    throw ContractError("task does not match the network dimensions");
  }
  if (plan.z0.size() != true_weights.d_intermediate()) throw ContractError("plan does not match the network");
  if (config.epochs < 0) throw ContractError("epochs must be non-negative");

  const Withheld h = withheld_for(plan.protected_idx, true_weights.d_intermediate());
  std::mt19937_64 rng(config.seed);
  MlpWeights student = true_weights;
  if (config.reinitialize) reinitialize(student, h, rng);

  AttackReport report;
  report.kind = AttackKind::finetune;
  report.epochs = config.epochs;
  report.protected_count = plan.protected_idx.size();
  report.initial_task_metric = accuracy(student, task.test_x, task.test_y);

  LogitGrad ce = [&](const Vector& y, std::size_t idx, Vector& dy) {
    dy = softmax(y);
    const double loss = -std::log(std::max(dy[task.train_y[idx]], kProbabilityFloor));
    dy[task.train_y[idx]] -= 1.0;
    return loss;
  };
  train(student, h, task.train_x.size(), task.train_x, ce, config, rng, report);

  report.final_task_metric = accuracy(student, task.test_x, task.test_y);
  report.weight_recovery_error = recovery_error(student, true_weights, h);
  return report;
}

AttackReport distill_attack(const TaylorPackage& teacher, const MlpWeights& true_weights,
                            std::span<const Vector> corpus, std::span<const Vector> eval_batch,
                            const TrainConfig& config) {
  teacher.validate();
  true_weights.validate();
  if (teacher.d_model() != true_weights.d_model() || teacher.d_out != true_weights.d_out() ||
      teacher.d_intermediate() != true_weights.d_intermediate()) {
    throw ContractError("teacher package and reference weights differ in shape");
  }
  if (eval_batch.empty()) throw ContractError("distillation needs an evaluation batch");
  if (config.epochs < 0) throw ContractError("epochs must be non-negative");

  const Withheld h = withheld_for(teacher.protected_idx, teacher.d_intermediate());
  std::mt19937_64 rng(config.seed);

  // The student starts from what the package releases.
  MlpWeights student{teacher.V, Vector(teacher.d_intermediate()),
                     Matrix(teacher.d_out, teacher.d_intermediate()),
                     teacher.bias_folded() ? Vector(teacher.d_out) : teacher.c, teacher.activation};
  for (std::size_t m = 0; m < teacher.unprotected_idx.size(); ++m) {
    const std::size_t j = teacher.unprotected_idx[m];
    student.b[j] = teacher.residual_b[m];
    for (std::size_t i = 0; i < teacher.d_out; ++i) student.W(i, j) = teacher.residual_W(i, m);
  }
  if (config.reinitialize) {
    reinitialize(student, h, rng);
  } else {
    for (std::size_t j : h.cols) {
      student.b[j] = true_weights.b[j];
      for (std::size_t i = 0; i < teacher.d_out; ++i) student.W(i, j) = true_weights.W(i, j);
    }
    if (h.bias) student.c = true_weights.c;
  }

  auto teacher_logits = [&](std::span<const Vector> xs) {
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(taylor_forward(teacher, x, Exec::serial).y);
    return out;
  };
  const std::vector<Vector> eval_targets = teacher_logits(eval_batch);
  auto eval_kl = [&] {
    double sum = 0.0;
    for (std::size_t s = 0; s < eval_batch.size(); ++s) {
      sum += kl_divergence(eval_targets[s], mlp_forward(student, eval_batch[s], Exec::serial).y);
    }
    return sum / static_cast<double>(eval_batch.size());
  };

  AttackReport report;
  report.kind = AttackKind::distill;
  report.epochs = config.epochs;
  report.protected_count = teacher.k();
  report.initial_task_metric = eval_kl();

  const std::vector<Vector> xs(corpus.begin(), corpus.end());
  std::vector<Vector> targets;
  targets.reserve(xs.size());
  for (const auto& t : teacher_logits(xs)) targets.push_back(softmax(t));
  LogitGrad kl = [&](const Vector& y, std::size_t idx, Vector& dy) {
    dy = softmax(y);
    const Vector& p = targets[idx];
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      loss += p[i] * (std::log(std::max(p[i], kProbabilityFloor)) -
                      std::log(std::max(dy[i], kProbabilityFloor)));
      dy[i] -= p[i];
    }
    return loss;
  };
  train(student, h, xs.size(), xs, kl, config, rng, report);

  report.final_task_metric = eval_kl();
  report.weight_recovery_error = recovery_error(student, true_weights, h);
  return report;
}

std::string_view to_string(AttackKind kind) {
  return kind == AttackKind::finetune ? "finetune" : "distill";
}

std::string format_report(const AttackReport& r) {
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out;
  out += "attack_kind=" + std::string(to_string(r.kind)) + "\n";
  out += "epochs=" + std::to_string(r.epochs) + "\n";
  out += "protected_count=" + std::to_string(r.protected_count) + "\n";
  out += "initial_task_metric=" + real(r.initial_task_metric) + "\n";
  out += "final_task_metric=" + real(r.final_task_metric) + "\n";
  out += "weight_recovery_error=" + real(r.weight_recovery_error) + "\n";
  out += "failed=" + std::string(r.failed ? "1" : "0") + "\n";
  out += "loss_curve=";
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) {
    if (e > 0) out += ",";
    out += real(r.loss_curve[e]);
  }
  out += "\n";
  return out;
}

}  // namespace taylormlp
