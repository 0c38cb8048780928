// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rdsw {

/// Small dense row-major matrix (d <= 8 in practice).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
  /// Row-major construction; throws when sizes do not match.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix rotation(double theta);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return a_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return a_[r * cols_ + c]; }
  std::span<const double> data() const noexcept { return a_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
void multiply(const Matrix& a, std::span<const double> x, std::span<double> out) noexcept;
double determinant(const Matrix& a);
Matrix inverse(const Matrix& a);

}  // namespace rdsw
