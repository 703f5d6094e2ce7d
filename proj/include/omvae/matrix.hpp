// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace omvae {

// Dense row-major matrix of doubles.
//
// Masks are stored densely as well. At n sites, g genes and p pathways the
// two site/gene masks cost 2*n*g*8 bytes, e.g. ~80 MB for n=5000, g=1000;
// larger ontologies need a sparse format this library does not provide.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double value);
  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  std::string shape_string() const;

  // Exact (bitwise for non-NaN) equality of shape and contents.
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ElementOp { mul, add, sub };

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materialising the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// a·bᵀ without materialising the transpose.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op);
Matrix transpose(const Matrix& a);
Matrix scaled(const Matrix& a, double factor);
// 1×cols row of column sums.
Matrix column_sums(const Matrix& a);
// Adds a 1×cols row to every row of a.
void add_row_broadcast(Matrix& a, const Matrix& row);
// Rows of a in the given order.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);

double max_abs_difference(const Matrix& a, const Matrix& b);
std::size_t count_nonzero(const Matrix& a);

}  // namespace omvae
