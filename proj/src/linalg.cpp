// SPDX-License-Identifier: Apache-2.0
#include "rdsw/linalg.hpp"

#include <cmath>
#include <utility>

#include "rdsw/error.hpp"

namespace rdsw {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), a_(std::move(row_major)) {
  require(a_.size() == rows * cols, ErrorKind::invalid_argument,
          "matrix data size does not match its shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return Matrix(2, 2, {c, -s, s, c});
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorKind::invalid_argument, "matrix product shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

void multiply(const Matrix& a, std::span<const double> x, std::span<double> out) noexcept {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
}

double determinant(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorKind::invalid_argument, "determinant of a non-square matrix");
  const std::size_t n = a.rows();
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  Matrix lu = a;
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      det = -det;
    }
    det *= lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return det;
}

Matrix inverse(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorKind::invalid_argument, "inverse of a non-square matrix");
  const std::size_t n = a.rows();
  Matrix m = a;
  Matrix inv = Matrix::identity(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(m(i, k)) > std::fabs(m(piv, k))) piv = i;
    require(m(piv, k) != 0.0, ErrorKind::invalid_argument, "matrix is singular");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(m(k, j), m(piv, j));
      std::swap(inv(k, j), inv(piv, j));
    }
    const double d = m(k, k);
    for (std::size_t j = 0; j < n; ++j) {
      m(k, j) /= d;
      inv(k, j) /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      const double f = m(i, k);
      for (std::size_t j = 0; j < n; ++j) {
        m(i, j) -= f * m(k, j);
        inv(i, j) -= f * inv(k, j);
      }
    }
  }
  return inv;
}

}  // namespace rdsw
