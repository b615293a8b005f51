#include "taylormlp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace taylormlp {

namespace {

Tensor index_tensor(const std::vector<std::size_t>& idx) {
  return Tensor::vector(std::vector<double>(idx.begin(), idx.end()));
}

Tensor matrix_tensor(const Matrix& m) {
  const auto d = m.data();
  return Tensor::matrix(m.rows(), m.cols(), std::vector<double>(d.begin(), d.end()));
}

const Tensor& expect(const TensorContainer& c, const std::string& name, std::size_t rank) {
  const Tensor& t = c.get(name);
  if (t.rank() != rank) {
    throw FormatError("section '" + name + "' has rank " + std::to_string(t.rank()) +
                      ", expected " + std::to_string(rank));
  }
  return t;
}

std::size_t as_count(double v, const std::string& what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
    throw FormatError(what + " is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> read_index(const TensorContainer& c, const std::string& name) {
  const Tensor& t = expect(c, name, 1);
  std::vector<std::size_t> idx;
  idx.reserve(t.values.size());
  for (double v : t.values) idx.push_back(as_count(v, "index in '" + name + "'"));
  return idx;
}

Matrix read_matrix(const TensorContainer& c, const std::string& name) {
  const Tensor& t = expect(c, name, 2);
  return Matrix(t.dims[0], t.dims[1], t.values);
}

Vector read_vector(const TensorContainer& c, const std::string& name) {
  return expect(c, name, 1).values;
}

double read_scalar(const TensorContainer& c, const std::string& name) {
  return expect(c, name, 0).values.at(0);
}

ActivationKind read_activation(const TensorContainer& c) {
  const double v = read_scalar(c, "activation");
  if (v == 0.0) return ActivationKind::gelu;
  if (v == 1.0) return ActivationKind::silu;
  throw FormatError("unknown activation tag");
}

void require_kind(const TensorContainer& c, ContainerKind kind) {
  if (container_kind(c) != kind) throw FormatError("container holds a different object kind");
}

template <typename Validate>
void revalidate(Validate&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent container: ") + e.what());
  }
}

}  // namespace

ContainerKind container_kind(const TensorContainer& c) {
  const double v = read_scalar(c, "kind");
  if (v == 1.0) return ContainerKind::weights;
  if (v == 2.0) return ContainerKind::package;
  if (v == 3.0) return ContainerKind::stats;
  throw FormatError("unknown container kind");
}

TensorContainer to_container(const MlpWeights& weights) {
  TensorContainer c;
  c.put("kind", Tensor::scalar(static_cast<double>(ContainerKind::weights)));
  c.put("activation", Tensor::scalar(weights.activation == ActivationKind::gelu ? 0.0 : 1.0));
  c.put("V", matrix_tensor(weights.V));
  c.put("b", Tensor::vector(weights.b));
  c.put("W", matrix_tensor(weights.W));
  c.put("c", Tensor::vector(weights.c));
  return c;
}

TensorContainer to_container(const TaylorPackage& pkg) {
  TensorContainer c;
  c.put("kind", Tensor::scalar(static_cast<double>(ContainerKind::package)));
  c.put("activation", Tensor::scalar(pkg.activation == ActivationKind::gelu ? 0.0 : 1.0));
  c.put("order", Tensor::scalar(pkg.order));
  c.put("V", matrix_tensor(pkg.V));
  c.put("protected_idx", index_tensor(pkg.protected_idx));
  c.put("z0", Tensor::vector(pkg.z0));
  c.put("theta", Tensor{{pkg.d_out, static_cast<std::uint64_t>(pkg.order + 1), pkg.k()}, pkg.theta});
  c.put("unprotected_idx", index_tensor(pkg.unprotected_idx));
  c.put("residual_W", matrix_tensor(pkg.residual_W));
  c.put("residual_b", Tensor::vector(pkg.residual_b));
  c.put("c", Tensor::vector(pkg.c));
  return c;
}

TensorContainer to_container(const CalibrationStats& stats) {
  TensorContainer c;
  c.put("kind", Tensor::scalar(static_cast<double>(ContainerKind::stats)));
  c.put("count", Tensor::scalar(static_cast<double>(stats.count)));
  c.put("z_max", Tensor::vector(stats.z_max));
  c.put("z_min", Tensor::vector(stats.z_min));
  return c;
}

MlpWeights weights_from_container(const TensorContainer& c) {
  require_kind(c, ContainerKind::weights);
  MlpWeights w;
  revalidate([&] {
    w = MlpWeights{read_matrix(c, "V"), read_vector(c, "b"), read_matrix(c, "W"),
                   read_vector(c, "c"), read_activation(c)};
    w.validate();
  });
  return w;
}

TaylorPackage package_from_container(const TensorContainer& c) {
  require_kind(c, ContainerKind::package);
  TaylorPackage pkg;
  pkg.activation = read_activation(c);
  pkg.order = static_cast<int>(std::min<std::size_t>(as_count(read_scalar(c, "order"), "order"), 1000));
  revalidate([&] {
    pkg.V = read_matrix(c, "V");
    pkg.protected_idx = read_index(c, "protected_idx");
    pkg.z0 = read_vector(c, "z0");
    const Tensor& theta = expect(c, "theta", 3);
    if (theta.dims[1] != static_cast<std::uint64_t>(pkg.order) + 1 || theta.dims[2] != pkg.protected_idx.size()) {
      throw FormatError("theta dims disagree with order and K");
    }
    pkg.d_out = theta.dims[0];
    pkg.theta = theta.values;
    pkg.unprotected_idx = read_index(c, "unprotected_idx");
    pkg.residual_W = read_matrix(c, "residual_W");
    pkg.residual_b = read_vector(c, "residual_b");
    pkg.c = read_vector(c, "c");
    pkg.validate();
  });
  return pkg;
}

CalibrationStats stats_from_container(const TensorContainer& c) {
  require_kind(c, ContainerKind::stats);
  CalibrationStats s{read_vector(c, "z_max"), read_vector(c, "z_min"),
                     as_count(read_scalar(c, "count"), "count")};
  if (s.z_max.size() != s.z_min.size()) throw FormatError("z_max and z_min lengths differ");
  if (s.count > 0) {
    for (std::size_t j = 0; j < s.dims(); ++j) {
      if (!(s.z_min[j] <= s.z_max[j])) throw FormatError("z_min exceeds z_max");
    }
  }
  return s;
}

std::vector<Vector> read_vectors(std::istream& in, std::size_t width) {
  std::vector<Vector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream fields(line);
    std::string tok;
    Vector row;
    bool comment = false;
    while (fields >> tok) {
      if (row.empty() && tok[0] == '#') {
        comment = true;
        break;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v)) {
        throw FormatError("line " + std::to_string(line_no) + ": '" + tok + "' is not a finite number");
      }
      row.push_back(v);
    }
    if (comment || row.empty()) continue;
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " values, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Vector> read_vectors(const std::filesystem::path& path, std::size_t width) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  return read_vectors(in, width);
}

void write_vectors(std::ostream& out, const std::vector<Vector>& rows) {
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      if (j > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace taylormlp
