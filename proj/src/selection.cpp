// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "omvae/error.hpp"
#include "omvae/special.hpp"

namespace omvae {
namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // divisor n - 1
};

Moments moments(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, ss / static_cast<double>(values.size() - 1)};
}

}  // namespace

WelchResult welch_t(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw DomainError(fmt::format("welch_t: each group needs at least 2 samples (got {} and {})",
                                  group_a.size(), group_b.size()));
  }
  const double na = static_cast<double>(group_a.size());
  const double nb = static_cast<double>(group_b.size());
  const Moments a = moments(group_a);
  const Moments b = moments(group_b);
  const double va = a.variance / na;
  const double vb = b.variance / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    const double df = na + nb - 2.0;
    if (a.mean == b.mean) return {0.0, df};
    return {a.mean > b.mean ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity(),
            df};
  }
  const double t = (a.mean - b.mean) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return {t, df};
}

std::vector<SiteScore> score_sites(const TaskDataset& dataset) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < dataset.size(); ++i) (dataset.labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.size() < 2 || neg.size() < 2) {
    throw ValidationError(fmt::format("dataset '{}' needs at least 2 positives and 2 negatives (has {} / {})",
                                      dataset.task_id, pos.size(), neg.size()));
  }
  std::vector<double> a(pos.size()), b(neg.size());
  std::vector<SiteScore> scores;
  scores.reserve(dataset.site_ids.size());
  for (std::size_t j = 0; j < dataset.site_ids.size(); ++j) {
    for (std::size_t k = 0; k < pos.size(); ++k) a[k] = dataset.betas(pos[k], j);
    for (std::size_t k = 0; k < neg.size(); ++k) b[k] = dataset.betas(neg[k], j);
    const WelchResult w = welch_t(a, b);
    scores.push_back({dataset.site_ids[j], w.t, w.df, t_two_sided_p(w.t, w.df)});
  }
  return scores;
}

void sort_scores(std::vector<SiteScore>& scores) {
  std::sort(scores.begin(), scores.end(), [](const SiteScore& x, const SiteScore& y) {
    if (x.p_value != y.p_value) return x.p_value < y.p_value;
    return x.site_id < y.site_id;
  });
}

SelectionResult select_sites_with_scores(std::span<const TaskDataset> datasets,
                                         std::optional<std::size_t> num_selected) {
  if (datasets.empty()) throw ValidationError("select_sites: no datasets");
  for (const TaskDataset& d : datasets.subspan(1)) {
    if (d.site_ids != datasets[0].site_ids) {
      throw ValidationError(fmt::format("dataset '{}' does not share the site universe of '{}'", d.task_id,
                                        datasets[0].task_id));
    }
  }
  SelectionResult result;
  std::map<std::string, double> best;  // site -> smallest p where kept
  for (const TaskDataset& d : datasets) {
    std::vector<SiteScore> scores = score_sites(d);
    sort_scores(scores);
    const std::size_t keep =
        num_selected ? std::min(*num_selected, scores.size())
                     : static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](const SiteScore& s) {
                         return s.p_value <= kSignificanceLevel;
                       }));
    for (std::size_t k = 0; k < keep; ++k) {
      auto [it, inserted] = best.try_emplace(scores[k].site_id, scores[k].p_value);
      if (!inserted) it->second = std::min(it->second, scores[k].p_value);
    }
    result.scores.push_back(std::move(scores));
  }
  std::vector<std::pair<double, std::string>> ordered;
  for (const auto& [site, p] : best) ordered.emplace_back(p, site);
  std::sort(ordered.begin(), ordered.end());
  for (auto& [p, site] : ordered) result.sites.push_back(std::move(site));
  return result;
}

std::vector<std::string> select_sites(std::span<const TaskDataset> datasets, std::optional<std::size_t> num_selected) {
  return select_sites_with_scores(datasets, num_selected).sites;
}

}  // namespace omvae
