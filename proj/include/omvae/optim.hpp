// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "omvae/matrix.hpp"

namespace omvae {

struct ParamGroup {
  enum class Kind { encoder, decoder, classifier };
  Kind kind = Kind::encoder;
  std::size_t task = 0;  // meaningful for classifiers only

  bool is_autoencoder() const { return kind != Kind::classifier; }
  bool operator==(const ParamGroup&) const = default;
};

// Non-owning handle on one trainable tensor. `mask`, when set, pins the
// tensor to zero wherever the mask is zero. `generation` is bumped on every
// update so layer tapes recorded before the update are rejected.
struct ParamRef {
  std::string name;
  ParamGroup group;
  Matrix* value = nullptr;
  const Matrix* mask = nullptr;
  std::uint64_t* generation = nullptr;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter Adam moments and step counts, keyed by parameter name.
class ParamStore {
 public:
  struct Slot {
    Matrix first_moment;
    Matrix second_moment;
    std::int64_t steps = 0;
  };

  Slot& slot(const ParamRef& param);
  const Slot* find(const std::string& name) const;
  std::size_t size() const { return slots_.size(); }
  void clear() { slots_.clear(); }

 private:
  std::map<std::string, Slot> slots_;
};

// One bias-corrected Adam update of every parameter in `params` with the
// matching entry of `grads`. All gradients are validated (shape, finiteness)
// before any parameter changes.
void adam_step(ParamStore& store, std::span<const ParamRef> params, std::span<const Matrix> grads,
               double lr, const AdamConfig& config = {});

}  // namespace omvae
