// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef PLGAT_MATRIX_HPP_
#define PLGAT_MATRIX_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace plgat {

// Dense row-major matrix of doubles. A vector is a 1xN or Nx1 matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> v)
      : rows(r), cols(c), values(std::move(v)) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix scalar(double v) { return Matrix(1, 1, v); }

  std::size_t size() const { return values.size(); }

  double &operator()(std::size_t r, std::size_t c) {
    return values[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) {
    return {values.data() + r * cols, cols};
  }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }

  std::string shape_string() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
  }

  friend bool operator==(const Matrix &, const Matrix &) = default;
};

}  // namespace plgat

#endif  // PLGAT_MATRIX_HPP_
