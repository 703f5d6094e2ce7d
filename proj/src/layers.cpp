// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/layers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {

std::uint64_t MaskedLinear::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

MaskedLinear::MaskedLinear(Matrix mask)
    : weight_(mask.rows(), mask.cols()), bias_(1, mask.cols()), mask_(std::move(mask)) {
  check_invariants();
}

MaskedLinear::MaskedLinear(Matrix weight, Matrix bias, Matrix mask)
    : weight_(std::move(weight)), bias_(std::move(bias)), mask_(std::move(mask)) {
  check_invariants();
}

MaskedLinear::MaskedLinear(const MaskedLinear& other)
    : weight_(other.weight_), bias_(other.bias_), mask_(other.mask_), id_(next_id()) {}

MaskedLinear& MaskedLinear::operator=(const MaskedLinear& other) {
  if (this != &other) {
    weight_ = other.weight_;
    bias_ = other.bias_;
    mask_ = other.mask_;
    id_ = next_id();
    generation_ = 0;
  }
  return *this;
}

void MaskedLinear::check_invariants() const {
  if (!weight_.same_shape(mask_)) {
    throw ShapeError(fmt::format("MaskedLinear: weight {} and mask {} differ", weight_.shape_string(),
                                 mask_.shape_string()));
  }
  if (bias_.rows() != 1 || bias_.cols() != mask_.cols()) {
    throw ShapeError(fmt::format("MaskedLinear: bias {} does not match {} outputs",
                                 bias_.shape_string(), mask_.cols()));
  }
  for (double m : mask_.data()) {
    if (!(m >= 0.0 && m <= 1.0)) throw ValidationError(fmt::format("mask entry {} outside [0,1]", m));
  }
}

Matrix& MaskedLinear::mutable_weight() {
  ++generation_;
  return weight_;
}

Matrix& MaskedLinear::mutable_bias() {
  ++generation_;
  return bias_;
}

void MaskedLinear::init_effective_glorot(Rng& rng) {
  const std::size_t rows = mask_.rows();
  const std::size_t cols = mask_.cols();
  std::vector<std::size_t> row_nnz(rows, 0), col_nnz(cols, 0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (mask_(i, j) != 0.0) {
        ++row_nnz[i];
        ++col_nnz[j];
      }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      // Always draw so the stream does not depend on the mask pattern.
      const double u = rng.uniform(-1.0, 1.0);
      if (mask_(i, j) == 0.0) {
        weight_(i, j) = 0.0;
        continue;
      }
      const double fan = static_cast<double>(std::max<std::size_t>(col_nnz[j], 1) +
                                             std::max<std::size_t>(row_nnz[i], 1));
      weight_(i, j) = u * std::sqrt(6.0 / fan);
    }
  }
  bias_.fill(0.0);
  ++generation_;
}

Matrix MaskedLinear::effective_weight() const {
  Matrix out(weight_.rows(), weight_.cols());
  auto w = weight_.data();
  auto m = mask_.data();
  auto e = out.data();
  // Zero-mask entries are exactly +0 whatever the stored weight holds.
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = m[i] == 0.0 ? 0.0 : w[i] * m[i];
  return out;
}

Matrix MaskedLinear::forward(const Matrix& x) const {
  if (x.cols() != in_features()) {
    throw ShapeError(fmt::format("MaskedLinear::forward: input {} but layer expects {} features",
                                 x.shape_string(), in_features()));
  }
  Matrix y = matmul(x, effective_weight());
  add_row_broadcast(y, bias_);
  return y;
}

Matrix MaskedLinear::forward(const Matrix& x, LinearTape& tape) const {
  Matrix y = forward(x);
  tape.input_ = x;
  tape.layer_id_ = id_;
  tape.generation_ = generation_;
  tape.filled_ = true;
  return y;
}

LinearGrads MaskedLinear::backward(LinearTape& tape, const Matrix& dy) const {
  if (!tape.filled_) throw Error("MaskedLinear::backward: tape is empty or already consumed");
  if (tape.layer_id_ != id_) throw Error("MaskedLinear::backward: tape was recorded by another layer");
  if (tape.generation_ != generation_) {
    throw Error("MaskedLinear::backward: stale tape, parameters changed since forward");
  }
  if (dy.rows() != tape.input_.rows() || dy.cols() != out_features()) {
    throw ShapeError(fmt::format("MaskedLinear::backward: upstream gradient {} expected [{}x{}]",
                                 dy.shape_string(), tape.input_.rows(), out_features()));
  }
  LinearGrads grads;
  grads.weight = matmul_at_b(tape.input_, dy);
  auto gw = grads.weight.data();
  auto m = mask_.data();
  for (std::size_t i = 0; i < gw.size(); ++i) gw[i] = m[i] == 0.0 ? 0.0 : gw[i] * m[i];
  grads.bias = column_sums(dy);
  grads.input = matmul_a_bt(dy, effective_weight());
  tape.filled_ = false;
  tape.input_ = Matrix();
  return grads;
}

double sigmoid(double x) {
  // Clamped so the result stays strictly inside (0, 1) for every finite x.
  constexpr double kLow = std::numeric_limits<double>::denorm_min();
  constexpr double kHigh = 1.0 - 0x1.0p-53;
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kLow, kHigh);
}

Matrix sigmoid_forward(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = sigmoid(in[i]);
  return out;
}

Matrix sigmoid_backward(const Matrix& output, const Matrix& dy) {
  if (!output.same_shape(dy)) {
    throw ShapeError(fmt::format("sigmoid_backward: {} vs {}", output.shape_string(), dy.shape_string()));
  }
  Matrix out(dy.rows(), dy.cols());
  auto s = output.data();
  auto g = dy.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = g[i] * s[i] * (1.0 - s[i]);
  return out;
}

Matrix relu_forward(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& input, const Matrix& dy) {
  if (!input.same_shape(dy)) {
    throw ShapeError(fmt::format("relu_backward: {} vs {}", input.shape_string(), dy.shape_string()));
  }
  Matrix out(dy.rows(), dy.cols());
  auto x = input.data();
  auto g = dy.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] > 0.0 ? g[i] : 0.0;
  return out;
}

}  // namespace omvae
