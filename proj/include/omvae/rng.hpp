// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "omvae/matrix.hpp"

namespace omvae {

// xoshiro256** (Blackman & Vigna) seeded through SplitMix64.
//
// Every draw is computed with integer arithmetic plus correctly rounded
// double operations, so streams match across platforms; std::*_distribution
// is deliberately avoided because its output is implementation-defined.
//
// Independent substreams are obtained with Rng::derive(seed, {key...}); the
// key path is hashed with SplitMix64 so that e.g. the noise stream for
// (stage 1, epoch 3, task 2) does not depend on how many draws any other
// (stage, epoch, task) consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n > 0. Unbiased (Lemire's method).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via the Marsaglia polar method.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// rows×cols matrix of i.i.d. standard normal draws.
Matrix gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols);

// Streams used throughout the library; part of the determinism contract.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kSynthetic = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kNoise = 5;
inline constexpr std::uint64_t kHoldout = 6;
}  // namespace stream

}  // namespace omvae
