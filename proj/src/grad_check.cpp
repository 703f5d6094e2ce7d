// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport grad_check(const std::function<double()>& loss_fn, std::span<const ParamRef> params,
                           std::span<const Matrix> analytic, double epsilon) {
  return grad_check_terms([&] { return std::vector<double>{loss_fn()}; }, params, analytic, epsilon);
}

GradCheckReport grad_check_terms(const std::function<std::vector<double>()>& terms_fn,
                                 std::span<const ParamRef> params, std::span<const Matrix> analytic,
                                 double epsilon) {
  if (params.size() != analytic.size()) {
    throw ShapeError(fmt::format("grad_check: {} parameters but {} gradients", params.size(),
                                 analytic.size()));
  }
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = *params[p].value;
    if (!analytic[p].same_shape(value)) {
      throw ShapeError(fmt::format("grad_check: gradient for '{}' has shape {}, parameter {}",
                                   params[p].name, analytic[p].shape_string(), value.shape_string()));
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = value.data()[i];
      value.data()[i] = original + epsilon;
      const double step_up = value.data()[i] - original;
      const std::vector<double> plus = terms_fn();
      value.data()[i] = original - epsilon;
      const double step_down = original - value.data()[i];
      const std::vector<double> minus = terms_fn();
      value.data()[i] = original;
      if (params[p].generation != nullptr) ++*params[p].generation;
      if (plus.size() != minus.size()) throw Error("grad_check: loss term count changed between evaluations");

      double difference = 0.0;
      for (std::size_t k = 0; k < plus.size(); ++k) difference += plus[k] - minus[k];
      const double numeric = difference / (step_up + step_down);
      const double a = analytic[p].data()[i];
      const double err = relative_error(a, numeric);
      ++report.entries_checked;
      if (report.entries_checked == 1 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = params[p].name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace omvae
