// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError(fmt::format("matrix data has {} entries, expected {}x{}={}", data_.size(), rows,
                                 cols, rows * cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const { return fmt::format("[{}x{}]", rows_, cols_); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError(
        fmt::format("matmul: inner dimensions differ, {} x {}", a.shape_string(), b.shape_string()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(fmt::format("matmul_at_b: row counts differ, {}ᵀ x {}", a.shape_string(),
                                 b.shape_string()));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError(fmt::format("matmul_a_bt: column counts differ, {} x {}ᵀ", a.shape_string(),
                                 b.shape_string()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto b_row = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op) {
  if (!a.same_shape(b)) {
    throw ShapeError(
        fmt::format("elementwise: shapes differ, {} vs {}", a.shape_string(), b.shape_string()));
  }
  Matrix out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto z = out.data();
  switch (op) {
    case ElementOp::mul:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
      break;
    case ElementOp::add:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
      break;
    case ElementOp::sub:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
      break;
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix scaled(const Matrix& a, double factor) {
  Matrix out = a;
  for (double& v : out.data()) v *= factor;
  return out;
}

Matrix column_sums(const Matrix& a) {
  Matrix out(1, a.cols());
  auto sums = out.row(0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += r[j];
  }
  return out;
}

void add_row_broadcast(Matrix& a, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError(fmt::format("add_row_broadcast: {} cannot broadcast onto {}", row.shape_string(),
                                 a.shape_string()));
  }
  auto b = row.row(0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] += b[j];
  }
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) {
      throw ShapeError(fmt::format("gather_rows: row {} out of range for {}", indices[i],
                                   a.shape_string()));
    }
    auto src = a.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(fmt::format("max_abs_difference: shapes differ, {} vs {}", a.shape_string(),
                                 b.shape_string()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

std::size_t count_nonzero(const Matrix& a) {
  return static_cast<std::size_t>(
      std::count_if(a.data().begin(), a.data().end(), [](double v) { return v != 0.0; }));
}

}  // namespace omvae
