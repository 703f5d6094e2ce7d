// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "omvae/matrix.hpp"

namespace omvae {

// Sums accumulate in long double so finite-difference checks of small
// gradients are not limited by rounding of the reduction.
struct LossValue {
  double value = 0.0;
  Matrix grad;  // d value / d prediction
};

// Mean over all entries of (target - prediction)²; grad = 2(prediction - target)/count.
LossValue mse(const Matrix& target, const Matrix& prediction);

inline constexpr double kBceClip = 1e-7;

// Mean of -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1 - 1e-7].
// Labels must be exactly 0 or 1. The gradient is zero where p was clipped.
LossValue bce(const Matrix& probabilities, const Matrix& labels);

}  // namespace omvae
