#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace taylormlp {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Which implementation of a kernel to run. Serial is the reference path; the
// parallel path splits work across output rows only, so every row reduction
// runs in the same order and both paths agree bit for bit.
enum class Exec { serial, parallel };

double dot(std::span<const double> a, std::span<const double> b);

// out = m * x
void matvec(const Matrix& m, std::span<const double> x, std::span<double> out,
            Exec exec = Exec::parallel);

// out[k] = <m.row(rows[k]), x>
void matvec_rows(const Matrix& m, std::span<const std::size_t> rows,
                 std::span<const double> x, std::span<double> out,
                 Exec exec = Exec::parallel);

// out = m^T * x
void matvec_transposed(const Matrix& m, std::span<const double> x,
                       std::span<double> out);

// m += alpha * u v^T
void add_outer(Matrix& m, double alpha, std::span<const double> u,
               std::span<const double> v);

bool all_finite(std::span<const double> v);

double frobenius_norm(std::span<const double> v);

}  // namespace taylormlp
