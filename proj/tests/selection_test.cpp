// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "omvae/error.hpp"
#include "omvae/selection.hpp"
#include "test_util.hpp"

namespace omvae {
namespace {

std::string fmt_site(std::size_t s) {
  std::string id = std::to_string(s);
  return "site" + std::string(4 - id.size(), '0') + id;
}

// Independent scoring: direct Welch formula plus Boost's Student t.
double oracle_p(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, s / static_cast<double>(v.size() - 1)};
  };
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::fabs(t)));
}

// `informative` sites get a positive-class shift of `shift`; the rest are noise.
TaskDataset make_dataset(std::string id, std::uint64_t seed, std::size_t sites, std::size_t samples,
                         const std::vector<std::size_t>& informative, double shift) {
  Rng rng(seed);
  TaskDataset d;
  d.task_id = std::move(id);
  for (std::size_t s = 0; s < sites; ++s) d.site_ids.push_back(fmt_site(s));
  d.betas = Matrix(samples, sites);
  for (std::size_t i = 0; i < samples; ++i) {
    d.sample_ids.push_back(d.task_id + "_" + std::to_string(i));
    d.labels.push_back(i % 2 == 0 ? 1 : 0);
    d.split.push_back(SplitTag::train);
    for (std::size_t s = 0; s < sites; ++s) d.betas(i, s) = 0.5 + 0.05 * rng.normal();
    for (std::size_t s : informative)
      if (d.labels[i] == 1) d.betas(i, s) += shift;
  }
  return d;
}

TEST(Welch, IdenticalGroupsGiveZero) {
  const std::vector<double> a{0.1, 0.4, 0.3};
  EXPECT_EQ(welch_t(a, a).t, 0.0);
}

TEST(Welch, ShiftedGroupsHandValue) {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  const WelchResult w = welch_t(a, b);
  EXPECT_NEAR(w.t, -1.0 / std::sqrt(2.0 / 3.0), 1e-14);
  EXPECT_NEAR(w.t, -1.2247, 1e-4);
  EXPECT_NEAR(w.df, 4.0, 1e-12);
}

TEST(Welch, EqualSizesAndVariancesMatchPooledT) {
  const std::vector<double> a{1, 2, 3, 4}, b{3, 4, 5, 6};
  const WelchResult w = welch_t(a, b);
  const double var = 5.0 / 3.0;
  const double pooled = (2.5 - 4.5) / std::sqrt(var * (0.25 + 0.25));
  EXPECT_NEAR(w.t, pooled, 1e-14);
  EXPECT_NEAR(w.df, 6.0, 1e-12);
}

TEST(Welch, DegenerateAndInvalidInputs) {
  const std::vector<double> a{0.5, 0.5}, b{0.5, 0.5, 0.5}, c{0.7, 0.7};
  const WelchResult w = welch_t(a, b);
  EXPECT_EQ(w.t, 0.0);
  EXPECT_EQ(w.df, 3.0);
  EXPECT_TRUE(std::isinf(welch_t(c, a).t));
  EXPECT_THROW(welch_t(std::vector<double>{1.0}, b), DomainError);
}

TEST(ScoreSites, MatchesIndependentOracle) {
  const TaskDataset d = make_dataset("t", 1, 20, 30, {2, 5}, 0.03);
  for (const SiteScore& s : score_sites(d)) {
    const std::size_t j = std::stoul(s.site_id.substr(4));
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] == 1 ? pos : neg).push_back(d.betas(i, j));
    EXPECT_NEAR(s.p_value, oracle_p(pos, neg), 1e-12) << s.site_id;
    EXPECT_GT(s.df, 0.0);
  }
}

TEST(ScoreSites, RejectsEmptyClass) {
  TaskDataset d = make_dataset("t", 1, 3, 6, {}, 0.0);
  d.labels.assign(6, 1);
  EXPECT_THROW(score_sites(d), ValidationError);
}

TEST(SelectSites, PureNoiseWithoutCountIsEmpty) {
  TaskDataset d = make_dataset("t", 2, 10, 20, {}, 0.0);
  // Make every site exactly balanced so no p-value can fall below the cut.
  for (std::size_t s = 0; s < 10; ++s)
    for (std::size_t i = 0; i < 20; i += 2) d.betas(i + 1, s) = d.betas(i, s);
  const std::vector<TaskDataset> ds{d};
  EXPECT_TRUE(select_sites(ds).empty());
}

TEST(SelectSites, DefaultFilterKeepsSignificantSites) {
  const std::vector<TaskDataset> ds{make_dataset("t", 3, 30, 40, {4, 9}, 0.2)};
  const auto sites = select_sites(ds);
  EXPECT_TRUE(std::find(sites.begin(), sites.end(), "site0004") != sites.end());
  EXPECT_TRUE(std::find(sites.begin(), sites.end(), "site0009") != sites.end());
  const auto scores = score_sites(ds[0]);
  for (const auto& id : sites) {
    const auto it = std::find_if(scores.begin(), scores.end(), [&](const SiteScore& s) { return s.site_id == id; });
    EXPECT_LE(it->p_value, kSignificanceLevel);
  }
}

TEST(SelectSites, DisjointTopSetsUnionToTwoK) {
  const std::vector<TaskDataset> ds{make_dataset("a", 4, 40, 40, {1, 2, 3}, 0.3),
                                    make_dataset("b", 5, 40, 40, {10, 11, 12}, 0.3)};
  const auto sites = select_sites(ds, 3);
  EXPECT_EQ(sites.size(), 6u);
  const std::set<std::string> got(sites.begin(), sites.end());
  EXPECT_EQ(got, (std::set<std::string>{"site0001", "site0002", "site0003", "site0010", "site0011", "site0012"}));
}

TEST(SelectSites, SingleSiteMatchesBruteForce) {
  const TaskDataset d = make_dataset("t", 6, 50, 30, {7, 20}, 0.02);
  std::string best_id;
  double best_p = 2.0;
  for (std::size_t j = 0; j < d.site_ids.size(); ++j) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] == 1 ? pos : neg).push_back(d.betas(i, j));
    const double p = oracle_p(pos, neg);
    if (p < best_p) {
      best_p = p;
      best_id = d.site_ids[j];
    }
  }
  const std::vector<TaskDataset> ds{d};
  EXPECT_EQ(select_sites(ds, 1), std::vector<std::string>{best_id});
}

TEST(SelectSites, TiesBreakOnSiteId) {
  TaskDataset d = make_dataset("t", 7, 4, 8, {}, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    d.betas(i, 3) = d.labels[i] == 1 ? 0.9 + 0.01 * static_cast<double>(i) : 0.1 + 0.01 * static_cast<double>(i);
    d.betas(i, 1) = d.betas(i, 3);
  }
  const std::vector<TaskDataset> ds{d};
  EXPECT_EQ(select_sites(ds, 2), (std::vector<std::string>{"site0001", "site0003"}));
}

TEST(SelectSitesProperty, OrderIndependentDeterministicAndMonotone) {
  std::vector<TaskDataset> ds;
  for (std::uint64_t t = 0; t < 4; ++t) ds.push_back(make_dataset("d" + std::to_string(t), 20 + t, 60, 30, {t, 10 + t}, 0.05));
  const auto base = select_sites(ds, 5);
  EXPECT_EQ(select_sites(ds, 5), base);
  std::vector<TaskDataset> reversed(ds.rbegin(), ds.rend());
  EXPECT_EQ(select_sites(reversed, 5), base);

  std::set<std::string> previous;
  for (std::size_t k = 1; k <= 20; ++k) {
    const auto sites = select_sites(ds, k);
    const std::set<std::string> now(sites.begin(), sites.end());
    EXPECT_TRUE(std::includes(now.begin(), now.end(), previous.begin(), previous.end())) << "k=" << k;
    previous = now;
  }
}

TEST(SelectSites, RejectsDifferentSiteUniverses) {
  std::vector<TaskDataset> ds{make_dataset("a", 1, 5, 8, {}, 0.0), make_dataset("b", 2, 6, 8, {}, 0.0)};
  EXPECT_THROW(select_sites(ds, 1), ValidationError);
}

}  // namespace
}  // namespace omvae
