// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {

ParamStore::Slot& ParamStore::slot(const ParamRef& param) {
  auto [it, inserted] = slots_.try_emplace(param.name);
  if (inserted || !it->second.first_moment.same_shape(*param.value)) {
    it->second.first_moment = Matrix(param.value->rows(), param.value->cols());
    it->second.second_moment = Matrix(param.value->rows(), param.value->cols());
    it->second.steps = 0;
  }
  return it->second;
}

const ParamStore::Slot* ParamStore::find(const std::string& name) const {
  auto it = slots_.find(name);
  return it == slots_.end() ? nullptr : &it->second;
}

void adam_step(ParamStore& store, std::span<const ParamRef> params, std::span<const Matrix> grads,
               double lr, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw ShapeError(fmt::format("adam_step: {} parameters but {} gradients", params.size(), grads.size()));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError(fmt::format("adam_step: bad learning rate {}", lr));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!grads[p].same_shape(*params[p].value)) {
      throw ShapeError(fmt::format("adam_step: gradient {} for '{}' does not match parameter {}",
                                   grads[p].shape_string(), params[p].name,
                                   params[p].value->shape_string()));
    }
    for (double g : grads[p].data()) {
      if (!std::isfinite(g)) {
        throw Error(fmt::format("adam_step: non-finite gradient for parameter '{}'", params[p].name));
      }
    }
  }

  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamRef& param = params[p];
    ParamStore::Slot& slot = store.slot(param);
    ++slot.steps;
    const double t = static_cast<double>(slot.steps);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);

    auto w = param.value->data();
    auto g = grads[p].data();
    auto m = slot.first_moment.data();
    auto v = slot.second_moment.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      if (param.mask != nullptr && param.mask->data()[i] == 0.0) continue;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    if (param.generation != nullptr) ++*param.generation;
  }
}

}  // namespace omvae
