// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace omvae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed input files, configs, or checkpoints. The CLI maps this to exit
// code 1; every other Error is a runtime failure (exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace omvae
