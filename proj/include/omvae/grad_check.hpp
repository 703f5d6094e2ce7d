// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "omvae/matrix.hpp"
#include "omvae/optim.hpp"

namespace omvae {

// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares `analytic[k]` against central differences of `loss_fn` taken by
// perturbing every entry of params[k] by ±epsilon in place. loss_fn must be
// deterministic (sampling noise frozen). Parameters are restored bit-exactly.
GradCheckReport grad_check(const std::function<double()>& loss_fn, std::span<const ParamRef> params,
                           std::span<const Matrix> analytic, double epsilon = 1e-6);

// Same check for a loss given as a sum of terms. Each term is differenced
// before summing, so a large term that does not depend on a parameter cannot
// drown a small one that does in rounding of the total.
GradCheckReport grad_check_terms(const std::function<std::vector<double>()>& terms_fn,
                                 std::span<const ParamRef> params, std::span<const Matrix> analytic,
                                 double epsilon = 1e-6);

}  // namespace omvae
