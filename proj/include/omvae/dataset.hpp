// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omvae/matrix.hpp"
#include "omvae/rng.hpp"

namespace omvae {

enum class SplitTag : std::uint8_t { train, val, test };

std::string_view split_name(SplitTag tag);
SplitTag parse_split(std::string_view name);

// One phenotype: samples × sites beta values in [0, 1] with binary labels.
struct TaskDataset {
  std::string task_id;
  std::vector<std::string> sample_ids;
  std::vector<std::string> site_ids;
  Matrix betas;
  std::vector<int> labels;
  std::vector<SplitTag> split;  // defaults to train for every sample

  std::size_t size() const { return sample_ids.size(); }
  void validate() const;
  std::vector<std::size_t> indices(SplitTag tag) const;
  // Columns restricted to and reordered by `sites`.
  TaskDataset select_sites(std::span<const std::string> sites) const;
  // Rows tagged `tag`, in original order.
  TaskDataset rows_with(SplitTag tag) const;
};

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

// Stratified split. Global split sizes follow the largest-remainder rounding
// of fractions × N. Within each class the samples are shuffled, the two
// classes are interleaved evenly, and the interleaved sequence is cut into
// contiguous train/val/test blocks, so every block holds within one sample
// of its proportional share of each class.
//
// Throws ValidationError when a class has fewer samples than there are
// splits with nonzero fraction.
TaskDataset split(TaskDataset dataset, const SplitFractions& fractions, Rng& rng);

}  // namespace omvae
