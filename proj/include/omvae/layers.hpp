// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "omvae/matrix.hpp"
#include "omvae/rng.hpp"

namespace omvae {

class MaskedLinear;

// Activations recorded by one MaskedLinear::forward call. A tape is consumed
// by exactly one backward call and is tied to the layer instance and
// parameter generation that produced it.
class LinearTape {
 public:
  bool filled() const { return filled_; }

 private:
  friend class MaskedLinear;
  Matrix input_;
  std::uint64_t layer_id_ = 0;
  std::uint64_t generation_ = 0;
  bool filled_ = false;
};

struct LinearGrads {
  Matrix input;   // b×in
  Matrix weight;  // in×out, exactly zero where the mask is zero
  Matrix bias;    // 1×out
};

// y = x·(W ⊙ M) + b.
//
// The mask M is fixed at construction. Raw weights at zero-mask positions are
// kept at 0 and never receive gradient, so the stored weight equals the
// effective weight wherever the mask is binary.
class MaskedLinear {
 public:
  MaskedLinear() = default;
  // Zero weights and bias.
  explicit MaskedLinear(Matrix mask);
  MaskedLinear(Matrix weight, Matrix bias, Matrix mask);

  MaskedLinear(const MaskedLinear& other);
  MaskedLinear& operator=(const MaskedLinear& other);
  MaskedLinear(MaskedLinear&&) noexcept = default;
  MaskedLinear& operator=(MaskedLinear&&) noexcept = default;

  std::size_t in_features() const { return mask_.rows(); }
  std::size_t out_features() const { return mask_.cols(); }

  const Matrix& weight() const { return weight_; }
  const Matrix& bias() const { return bias_; }
  const Matrix& mask() const { return mask_; }

  // Mutable access invalidates outstanding tapes.
  Matrix& mutable_weight();
  Matrix& mutable_bias();
  std::uint64_t* generation_counter() { return &generation_; }

  // Uniform in ±sqrt(6 / (fan_in + fan_out)) where the fans of entry (i, j)
  // count the nonzero mask entries in column j and row i (floor 1). Zero-mask
  // entries stay 0; the bias is zeroed.
  void init_effective_glorot(Rng& rng);

  Matrix effective_weight() const;

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, LinearTape& tape) const;
  // dW = (xᵀ dY) ⊙ M, dB = column sums of dY, dX = dY (W ⊙ M)ᵀ.
  LinearGrads backward(LinearTape& tape, const Matrix& dy) const;

 private:
  static std::uint64_t next_id();
  void check_invariants() const;

  Matrix weight_;
  Matrix bias_;
  Matrix mask_;
  std::uint64_t id_ = next_id();
  std::uint64_t generation_ = 0;
};

Matrix sigmoid_forward(const Matrix& x);
// dY ⊙ σ(1-σ), given the forward output σ.
Matrix sigmoid_backward(const Matrix& output, const Matrix& dy);
Matrix relu_forward(const Matrix& x);
// dY ⊙ [x > 0], given the forward input x.
Matrix relu_backward(const Matrix& input, const Matrix& dy);

double sigmoid(double x);

}  // namespace omvae
