#include "taylormlp/linalg.hpp"

#include <cmath>
#include <algorithm>
#include <cstdint>

#include "taylormlp/errors.hpp"

namespace taylormlp {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ContractError("matrix data length does not match rows*cols");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

void matvec(const Matrix& m, std::span<const double> x, std::span<double> out,
            Exec exec) {
  if (x.size() != m.cols() || out.size() != m.rows()) {
    throw ContractError("matvec shape mismatch");
  }
  const auto rows = static_cast<std::int64_t>(m.rows());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) out[r] = dot(m.row(r), x);
  } else {
    for (std::int64_t r = 0; r < rows; ++r) out[r] = dot(m.row(r), x);
  }
}

void matvec_rows(const Matrix& m, std::span<const std::size_t> rows,
                 std::span<const double> x, std::span<double> out, Exec exec) {
  if (x.size() != m.cols() || out.size() != rows.size()) {
    throw ContractError("matvec_rows shape mismatch");
  }
  const auto n = static_cast<std::int64_t>(rows.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) out[k] = dot(m.row(rows[k]), x);
  } else {
    for (std::int64_t k = 0; k < n; ++k) out[k] = dot(m.row(rows[k]), x);
  }
}

void matvec_transposed(const Matrix& m, std::span<const double> x,
                       std::span<double> out) {
  if (x.size() != m.rows() || out.size() != m.cols()) {
    throw ContractError("matvec_transposed shape mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * xr;
  }
}

void add_outer(Matrix& m, double alpha, std::span<const double> u,
               std::span<const double> v) {
  if (u.size() != m.rows() || v.size() != m.cols()) {
    throw ContractError("add_outer shape mismatch");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = alpha * u[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += s * v[c];
  }
}

bool all_finite(std::span<const double> v) {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

double frobenius_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double e : v) acc += e * e;
  return std::sqrt(acc);
}

}  // namespace taylormlp
