#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "taylormlp/attack.hpp"
#include "taylormlp/calibration.hpp"
#include "taylormlp/container.hpp"
#include "taylormlp/errors.hpp"
#include "taylormlp/io.hpp"
#include "taylormlp/metrics.hpp"
#include "taylormlp/taylor.hpp"

namespace taylormlp::cli {

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += real(v[i]);
  }
  return s;
}

MlpWeights load_weights(const std::string& path) {
  return weights_from_container(TensorContainer::read_file(path));
}

std::vector<Vector> gaussian(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> xs(n, Vector(dim));
  for (auto& x : xs) {
    for (double& v : x) v = normal(rng);
  }
  return xs;
}

// --calib may name a stats container or a text file of input vectors.
CalibrationStats load_calibration(const std::string& path, const MlpWeights& w) {
  const auto bytes = read_bytes(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, kContainerMagic)) {
    auto stats = stats_from_container(TensorContainer::decode(bytes));
    if (stats.dims() != w.d_intermediate()) throw ContractError("calibration stats do not match the weights");
    return stats;
  }
  return observe_batch(w, read_vectors(path, w.d_model()));
}

ProtectionPlan make_plan(const CalibrationStats& stats, std::optional<std::size_t> k, ActivationKind kind) {
  const std::size_t kk = k.value_or(stats.dims());
  return kk == 0 ? unprotected_plan(stats) : select_protected_columns(stats, kk, kind);
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!(f << text)) throw FileError("cannot write " + path);
}

bool in_hull(const MlpWeights& w, const CalibrationStats& s, const Vector& x) {
  Vector z(w.d_intermediate());
  matvec(w.V, x, z, Exec::serial);
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z[j] > s.z_max[j] || z[j] < s.z_min[j]) return false;
  }
  return true;
}

struct Options {
  // shared
  std::string weights, calib, out, input, package, jsonl;
  std::uint64_t seed = 0;
  int order = 8;
  std::optional<std::size_t> protect_k;
  // init
  std::string activation = "gelu";
  std::size_t d_model = 32, d_int = 128, d_out = 32;
  double weight_scale = 0.35, bias_scale = 0.1;
  // calibrate / bench
  std::size_t samples = 0;
  std::size_t eval_count = 256;
  std::vector<int> orders{0, 2, 4, 6, 8};
  int repetitions = 5;
  // attack
  std::optional<int> epochs;
  double lr = 1e-5;
  std::size_t batch = 64;
  std::optional<std::uint64_t> task_seed;
  std::size_t task_samples = 2000;
  double label_noise = 0.1;
};

int cmd_init(const Options& o, std::ostream& out) {
  const auto kind = parse_activation(o.activation);
  const auto w = random_weights({o.d_model, o.d_int, o.d_out}, kind, o.seed, {o.weight_scale, o.bias_scale});
  const auto bytes = to_container(w).encode();
  write_bytes(o.out, bytes);
  out << "activation=" << to_string(kind) << "\n"
      << "dims=" << o.d_model << "x" << o.d_int << "x" << o.d_out << "\n"
      << "bytes=" << bytes.size() << "\n";
  return kOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const auto w = load_weights(o.weights);
  CalibrationStats stats;
  if (!o.calib.empty()) {
    stats = load_calibration(o.calib, w);
  } else if (o.samples > 0) {
    stats = observe_batch(w, gaussian(o.samples, w.d_model(), o.seed));
  } else {
    throw ConfigError("calibrate needs --calib or --samples");
  }
  if (!o.out.empty()) to_container(stats).write_file(o.out);
  out << "count=" << stats.count << "\n"
      << "z0=" << join(estimate_local_embedding(stats)) << "\n";
  return kOk;
}

int cmd_transform(const Options& o, std::ostream& out, std::ostream& err) {
  const auto w = load_weights(o.weights);
  const auto stats = load_calibration(o.calib, w);
  const auto plan = make_plan(stats, o.protect_k, w.activation);
  const auto pkg = transform(w, plan, o.order);
  const auto bytes = to_container(pkg).encode();
  write_bytes(o.out, bytes);
  for (std::size_t j : plan.radius_warnings) {
    err << "warning: column " << j << " half-spread " << real(plan.spread[j] / 2)
        << " exceeds the silu convergence guard\n";
  }
  out << "activation=" << to_string(pkg.activation) << "\n"
      << "order=" << pkg.order << "\n"
      << "protected=" << pkg.k() << "/" << pkg.d_intermediate() << "\n"
      << "bytes=" << bytes.size() << "\n"
      << "radius_warnings=" << plan.radius_warnings.size() << "\n";
  return kOk;
}

int cmd_infer(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.package.empty() == o.weights.empty()) throw ConfigError("infer needs exactly one of --package or --weights");
  std::vector<Vector> ys;
  if (!o.package.empty()) {
    const auto pkg = package_from_container(TensorContainer::read_file(o.package));
    std::size_t flagged = 0;
    for (const auto& x : read_vectors(o.input, pkg.d_model())) {
      auto t = taylor_forward(pkg, x);
      flagged += t.radius_violation;
      ys.push_back(std::move(t.y));
    }
    if (flagged) err << "warning: " << flagged << " inputs left the silu convergence radius\n";
  } else {
    const auto w = load_weights(o.weights);
    for (const auto& x : read_vectors(o.input, w.d_model())) ys.push_back(mlp_forward(w, x).y);
  }
  std::ostringstream text;
  write_vectors(text, ys);
  emit(text.str(), o.out, out);
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const auto w = load_weights(o.weights);
  const auto stats = load_calibration(o.calib, w);
  const auto plan = make_plan(stats, o.protect_k, w.activation);
  if (plan.k() == 0) throw ConfigError("bench needs at least one protected column");
  std::vector<Vector> eval;
  if (!o.input.empty()) {
    eval = read_vectors(o.input, w.d_model());
  } else {
    // fresh inputs inside the calibration hull
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> normal;
    const std::size_t limit = o.eval_count * 1000;
    for (std::size_t tries = 0; eval.size() < o.eval_count && tries < limit; ++tries) {
      Vector x(w.d_model());
      for (double& v : x) v = normal(rng);
      if (in_hull(w, stats, x)) eval.push_back(std::move(x));
    }
  }
  if (eval.empty()) throw ConfigError("no evaluation inputs");

  auto rows = divergence_curve(w, plan, o.orders, eval);
  if (o.repetitions > 0) {
    for (auto& r : rows) {
      const auto timed = measure_latency(w, transform(w, plan, r.order), eval, o.repetitions);
      r.plain_wall = timed.plain_wall;
      r.taylor_wall = timed.taylor_wall;
    }
  }
  out << format_bench_table(rows);
  if (!o.jsonl.empty()) {
    std::string text;
    for (const auto& r : rows) {
      nlohmann::ordered_json j;
      j["order"] = r.order;
      j["k"] = r.k;
      j["plain_macs"] = r.plain_flops;
      j["taylor_macs"] = r.taylor_flops;
      j["plain_wall_s"] = r.plain_wall;
      j["taylor_wall_s"] = r.taylor_wall;
      j["kl"] = r.kl_divergence;
      j["max_abs_err"] = r.max_abs_err;
      j["eval_count"] = eval.size();
      text += j.dump() + "\n";
    }
    emit(text, o.jsonl, out);
  }
  return kOk;
}

int cmd_attack(AttackKind kind, const Options& o, std::ostream& out) {
  const auto w = load_weights(o.weights);
  ToyTaskSpec spec;
  spec.seed = o.task_seed.value_or(o.seed);
  spec.sample_count = o.task_samples;
  spec.label_noise = o.label_noise;
  const auto task = make_toy_task(w, spec);
  const auto stats = o.calib.empty() ? observe_batch(w, task.train_x) : load_calibration(o.calib, w);
  const auto plan = make_plan(stats, o.protect_k, w.activation);

  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.epochs = o.epochs.value_or(kind == AttackKind::finetune ? 10 : 1);

  AttackReport report;
  std::string extra;
  if (kind == AttackKind::finetune) {
    report = finetune_attack(w, plan, task, cfg);
    extra += "original_accuracy=" + real(accuracy(w, task.test_x, task.test_y)) + "\n";
    if (plan.k() > 0) {
      extra += "package_accuracy=" + real(accuracy(transform(w, plan, o.order), task.test_x, task.test_y)) + "\n";
    }
  } else {
    if (plan.k() == 0) throw ConfigError("distillation needs a protected package");
    const auto pkg = transform(w, plan, o.order);
    report = distill_attack(pkg, w, task.train_x, task.test_x, cfg);
    double kl = 0.0;
    for (const auto& x : task.test_x) kl += kl_divergence(mlp_forward(w, x).y, taylor_forward(pkg, x).y);
    extra += "package_kl=" + real(kl / static_cast<double>(task.test_x.size())) + "\n";
  }
  emit(format_report(report) + extra, o.out, out);
  return report.failed ? kNumeric : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Taylor-series MLP packages: transform, infer, calibrate, bench, attack"};
  app.set_config("--config", "", "TOML/INI file; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  auto* init = app.add_subcommand("init", "write seeded random weights");
  init->add_option("--activation", o.activation, "gelu or silu")->capture_default_str();
  init->add_option("--d-model", o.d_model)->capture_default_str();
  init->add_option("--d-intermediate", o.d_int)->capture_default_str();
  init->add_option("--d-out", o.d_out)->capture_default_str();
  init->add_option("--weight-scale", o.weight_scale)->capture_default_str();
  init->add_option("--bias-scale", o.bias_scale)->capture_default_str();
  init->add_option("--seed", o.seed)->capture_default_str();
  init->add_option("--out", o.out)->required();

  auto* calibrate = app.add_subcommand("calibrate", "collect pre-activation ranges and print z0");
  calibrate->add_option("--weights", o.weights)->required();
  calibrate->add_option("--calib", o.calib, "text file of input vectors or a stats container");
  calibrate->add_option("--samples", o.samples, "synthetic N(0, I) inputs when --calib is absent");
  calibrate->add_option("--seed", o.seed);
  calibrate->add_option("--out", o.out, "stats container to write");

  auto* xform = app.add_subcommand("transform", "build a protected package");
  xform->add_option("--weights", o.weights)->required();
  xform->add_option("--calib", o.calib, "stats container or text file of inputs")->required();
  xform->add_option("--order", o.order)->capture_default_str();
  xform->add_option("--protect-k", o.protect_k, "columns to protect (default: all)");
  xform->add_option("--out", o.out)->required();

  auto* infer = app.add_subcommand("infer", "run a package or plain weights over input vectors");
  infer->add_option("--package", o.package);
  infer->add_option("--weights", o.weights);
  infer->add_option("--input", o.input)->required();
  infer->add_option("--out", o.out);

  auto* bench = app.add_subcommand("bench", "divergence and latency per expansion order");
  bench->add_option("--weights", o.weights)->required();
  bench->add_option("--calib", o.calib)->required();
  bench->add_option("--orders", o.orders)->delimiter(',')->capture_default_str();
  bench->add_option("--protect-k", o.protect_k);
  bench->add_option("--input", o.input, "evaluation inputs (default: seeded in-hull samples)");
  bench->add_option("--eval-count", o.eval_count)->capture_default_str();
  bench->add_option("--repetitions", o.repetitions, "timing repetitions; 0 skips timing")->capture_default_str();
  bench->add_option("--seed", o.seed);
  bench->add_option("--jsonl", o.jsonl, "also write one JSON record per order");

  auto* attack = app.add_subcommand("attack", "try to recover the protected weights");
  attack->require_subcommand(1);
  for (const char* name : {"finetune", "distill"}) {
    auto* sub = attack->add_subcommand(name);
    sub->add_option("--weights", o.weights)->required();
    sub->add_option("--calib", o.calib, "default: the task's training inputs");
    sub->add_option("--protect-k", o.protect_k, "0 runs the unprotected control (default: all)");
    sub->add_option("--order", o.order)->capture_default_str();
    sub->add_option("--epochs", o.epochs, "default 10 for finetune, 1 for distill");
    sub->add_option("--lr", o.lr)->capture_default_str();
    sub->add_option("--batch", o.batch)->capture_default_str();
    sub->add_option("--seed", o.seed);
    sub->add_option("--task-seed", o.task_seed, "default: --seed");
    sub->add_option("--task-samples", o.task_samples)->capture_default_str();
    sub->add_option("--label-noise", o.label_noise)->capture_default_str();
    sub->add_option("--out", o.out);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*init) return cmd_init(o, out);
    if (*calibrate) return cmd_calibrate(o, out);
    if (*xform) return cmd_transform(o, out, err);
    if (*infer) return cmd_infer(o, out, err);
    if (*bench) return cmd_bench(o, out);
    return cmd_attack(*attack->get_subcommand("finetune") ? AttackKind::finetune : AttackKind::distill, o, out);
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const FileError& e) {
    err << "file error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace taylormlp::cli
