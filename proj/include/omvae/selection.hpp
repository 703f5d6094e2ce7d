// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omvae/dataset.hpp"

namespace omvae {

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
};

// Welch's unequal-variance t statistic (mean_a - mean_b) / sqrt(s²_a/n_a + s²_b/n_b)
// with Welch–Satterthwaite degrees of freedom. When both groups have zero
// variance: equal means give t = 0, df = n_a + n_b - 2; different means give
// t = ±inf with the same df.
WelchResult welch_t(std::span<const double> group_a, std::span<const double> group_b);

struct SiteScore {
  std::string site_id;
  double t_stat = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

inline constexpr double kSignificanceLevel = 0.05;

// Positives (label 1) against negatives (label 0) for every site, in the
// dataset's site order.
std::vector<SiteScore> score_sites(const TaskDataset& dataset);

// Ascending p-value, ties broken by site id.
void sort_scores(std::vector<SiteScore>& scores);

// Per dataset: keep sites with p <= 0.05, or exactly the num_selected
// smallest p-values when given (no p filter then). Returns the union ordered
// by (best p across datasets, site id).
std::vector<std::string> select_sites(std::span<const TaskDataset> datasets,
                                      std::optional<std::size_t> num_selected = std::nullopt);

struct SelectionResult {
  std::vector<std::string> sites;
  std::vector<std::vector<SiteScore>> scores;  // per dataset, sorted
};

SelectionResult select_sites_with_scores(std::span<const TaskDataset> datasets,
                                         std::optional<std::size_t> num_selected = std::nullopt);

}  // namespace omvae
