// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {

LossValue mse(const Matrix& target, const Matrix& prediction) {
  if (!target.same_shape(prediction)) {
    throw ShapeError(fmt::format("mse: target {} vs prediction {}", target.shape_string(),
                                 prediction.shape_string()));
  }
  if (target.empty()) throw ShapeError("mse: empty input");
  const double count = static_cast<double>(target.size());
  LossValue out{0.0, Matrix(target.rows(), target.cols())};
  auto x = target.data();
  auto y = prediction.data();
  auto g = out.grad.data();
  long double sum = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    sum += static_cast<long double>(d) * d;
    g[i] = 2.0 * d / count;
  }
  out.value = static_cast<double>(sum / count);
  return out;
}

LossValue bce(const Matrix& probabilities, const Matrix& labels) {
  if (!probabilities.same_shape(labels)) {
    throw ShapeError(fmt::format("bce: probabilities {} vs labels {}", probabilities.shape_string(),
                                 labels.shape_string()));
  }
  if (labels.empty()) throw ShapeError("bce: empty input");
  const double count = static_cast<double>(labels.size());
  LossValue out{0.0, Matrix(labels.rows(), labels.cols())};
  auto p = probabilities.data();
  auto y = labels.data();
  auto g = out.grad.data();
  long double sum = 0.0L;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw DomainError(fmt::format("bce: label {} is not 0 or 1", y[i]));
    const double pc = std::clamp(p[i], kBceClip, 1.0 - kBceClip);
    const bool clipped = pc != p[i];
    if (y[i] == 1.0) {
      sum -= std::log(pc);
      g[i] = clipped ? 0.0 : -1.0 / (pc * count);
    } else {
      sum -= std::log1p(-pc);
      g[i] = clipped ? 0.0 : 1.0 / ((1.0 - pc) * count);
    }
  }
  out.value = static_cast<double>(sum / count);
  return out;
}

}  // namespace omvae
