// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {

std::string_view split_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
  }
  return "?";
}

SplitTag parse_split(std::string_view name) {
  if (name == "train") return SplitTag::train;
  if (name == "val") return SplitTag::val;
  if (name == "test") return SplitTag::test;
  throw ValidationError(fmt::format("unknown split '{}' (expected train, val or test)", name));
}

void TaskDataset::validate() const {
  const std::size_t n = sample_ids.size();
  if (betas.rows() != n || labels.size() != n || split.size() != n) {
    throw ValidationError(fmt::format(
        "dataset '{}': {} samples but betas has {} rows, {} labels, {} split tags", task_id, n,
        betas.rows(), labels.size(), split.size()));
  }
  if (betas.cols() != site_ids.size()) {
    throw ValidationError(fmt::format("dataset '{}': {} site ids for {} beta columns", task_id,
                                      site_ids.size(), betas.cols()));
  }
  for (double v : betas.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(fmt::format("dataset '{}': beta value {} outside [0,1]", task_id, v));
    }
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError(fmt::format("dataset '{}': label {} not in {{0,1}}", task_id, y));
  }
}

std::vector<std::size_t> TaskDataset::indices(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == tag) out.push_back(i);
  return out;
}

TaskDataset TaskDataset::select_sites(std::span<const std::string> sites) const {
  std::unordered_map<std::string_view, std::size_t> column;
  for (std::size_t j = 0; j < site_ids.size(); ++j) column.emplace(site_ids[j], j);
  std::vector<std::size_t> cols;
  cols.reserve(sites.size());
  for (const std::string& s : sites) {
    auto it = column.find(s);
    if (it == column.end()) {
      throw ValidationError(fmt::format("dataset '{}' has no site '{}'", task_id, s));
    }
    cols.push_back(it->second);
  }
  TaskDataset out{task_id, sample_ids, {sites.begin(), sites.end()}, Matrix(size(), sites.size()), labels, split};
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out.betas(i, j) = betas(i, cols[j]);
  return out;
}

TaskDataset TaskDataset::rows_with(SplitTag tag) const {
  const std::vector<std::size_t> idx = indices(tag);
  TaskDataset out;
  out.task_id = task_id;
  out.site_ids = site_ids;
  out.betas = gather_rows(betas, idx);
  for (std::size_t i : idx) {
    out.sample_ids.push_back(sample_ids[i]);
    out.labels.push_back(labels[i]);
    out.split.push_back(tag);
  }
  return out;
}

namespace {

// Largest-remainder apportionment of `total` over `fractions`; ties go to the
// earlier split.
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double quota = fractions[s] * static_cast<double>(total);
    counts[s] = static_cast<std::size_t>(std::floor(quota));
    remainders[s] = quota - static_cast<double>(counts[s]);
    assigned += counts[s];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

}  // namespace

TaskDataset split(TaskDataset dataset, const SplitFractions& fractions, Rng& rng) {
  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  for (double v : f) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("split fraction {} outside [0,1]", v));
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw ValidationError(fmt::format("split fractions sum to {}, expected 1", f[0] + f[1] + f[2]));
  }
  const std::size_t n = dataset.size();
  if (dataset.labels.size() != n) throw ValidationError("split: label count differs from sample count");

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[dataset.labels[i] == 1 ? 1 : 0].push_back(i);
  const auto active = static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [](double v) { return v > 0.0; }));
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < active) {
      throw ValidationError(fmt::format("dataset '{}': class {} has {} samples, too few to stratify over {} splits",
                                        dataset.task_id, c, by_class[c].size(), active));
    }
    rng.shuffle(std::span<std::size_t>(by_class[c]));
  }

  // Evenly interleave the classes: position i holds a positive iff
  // floor((i+1)·n1/N) > floor(i·n1/N).
  const std::size_t positives = by_class[1].size();
  std::vector<std::size_t> sequence;
  sequence.reserve(n);
  std::size_t next0 = 0, next1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = ((i + 1) * positives) / n > (i * positives) / n;
    sequence.push_back(positive ? by_class[1][next1++] : by_class[0][next0++]);
  }

  const std::array<std::size_t, 3> counts = apportion(n, f);
  const std::array<SplitTag, 3> tags{SplitTag::train, SplitTag::val, SplitTag::test};
  dataset.split.assign(n, SplitTag::train);
  std::array<std::size_t, 3> begin{0, counts[0], counts[0] + counts[1]};
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = begin[s]; k < begin[s] + counts[s]; ++k) dataset.split[sequence[k]] = tags[s];

  // A short block can miss a class entirely; swap in one sample from the
  // block holding the most of that class.
  for (int c = 0; c < 2; ++c) {
    for (std::size_t s = 0; s < 3; ++s) {
      if (counts[s] == 0) continue;
      auto members = [&](std::size_t split_index, int cls) {
        std::vector<std::size_t> out;
        for (std::size_t k = begin[split_index]; k < begin[split_index] + counts[split_index]; ++k)
          if ((dataset.labels[sequence[k]] == 1) == (cls == 1)) out.push_back(k);
        return out;
      };
      if (!members(s, c).empty()) continue;
      std::size_t donor = 3;
      std::size_t donor_count = 1;
      for (std::size_t d = 0; d < 3; ++d) {
        const std::size_t have = members(d, c).size();
        if (d != s && have > donor_count) {
          donor = d;
          donor_count = have;
        }
      }
      if (donor == 3) continue;
      const std::size_t give = members(donor, c).back();
      const std::size_t take = members(s, 1 - c).back();
      std::swap(sequence[give], sequence[take]);
      dataset.split[sequence[give]] = tags[donor];
      dataset.split[sequence[take]] = tags[s];
    }
  }
  return dataset;
}

}  // namespace omvae
