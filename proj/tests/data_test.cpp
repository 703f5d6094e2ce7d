// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>
#include <zlib.h>

#include "omvae/data_io.hpp"
#include "omvae/dataset.hpp"
#include "omvae/error.hpp"
#include "omvae/synthetic.hpp"
#include "test_util.hpp"

namespace omvae {
namespace {

using testing::read_file;
using testing::scratch_dir;
using testing::write_file;

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(LoadBetaMatrix, WellFormedRoundTrip) {
  const auto dir = scratch_dir("beta_rt");
  write_file(dir / "b.tsv", "sample_id\tcg1\tcg2\nA\t0.25\t1\nB\t0\t0.125\n");
  const BetaTable t = load_beta_matrix(dir / "b.tsv");
  EXPECT_EQ(t.site_ids, (std::vector<std::string>{"cg1", "cg2"}));
  EXPECT_EQ(t.sample_ids, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(t.values, Matrix::from_rows({{0.25, 1}, {0, 0.125}}));
}

TEST(LoadBetaMatrix, OutOfRangeCitesLine) {
  const auto dir = scratch_dir("beta_range");
  write_file(dir / "b.tsv", "sample_id\tcg1\nA\t0.5\nB\t1.2\n");
  const std::string msg = error_of([&] { load_beta_matrix(dir / "b.tsv"); });
  EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
}

TEST(LoadBetaMatrix, MalformedRowLengthCitesLine) {
  const auto dir = scratch_dir("beta_len");
  write_file(dir / "b.tsv", "sample_id\tcg1\tcg2\nA\t0.5\n");
  EXPECT_NE(error_of([&] { load_beta_matrix(dir / "b.tsv"); }).find(":2:"), std::string::npos);
}

TEST(LoadBetaMatrix, MissingValuesNeedImpute) {
  const auto dir = scratch_dir("beta_na");
  write_file(dir / "b.tsv", "sample_id\tcg1\tcg2\nA\t0.2\t0.1\nB\tNA\t0.1\nC\t0.4\t0.1\n");
  EXPECT_THROW(load_beta_matrix(dir / "b.tsv"), ValidationError);
  const BetaTable t = load_beta_matrix(dir / "b.tsv", {true});
  EXPECT_NEAR(t.values(1, 0), 0.3, 1e-15);

  write_file(dir / "c.tsv", "sample_id\tcg1\nA\tNA\nB\tNA\n");
  EXPECT_THROW(load_beta_matrix(dir / "c.tsv", {true}), ValidationError);
}

TEST(LoadBetaMatrix, ReadsGzip) {
  const auto dir = scratch_dir("beta_gz");
  const std::string text = "sample_id\tcg1\nA\t0.75\n";
  gzFile f = gzopen((dir / "b.tsv.gz").c_str(), "wb");
  ASSERT_NE(f, nullptr);
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  EXPECT_EQ(load_beta_matrix(dir / "b.tsv.gz").values, Matrix::from_rows({{0.75}}));
}

TEST(LoadersProperty, WriteThenLoadIsExact) {
  const auto dir = scratch_dir("loaders_rt");
  Rng rng(1);
  BetaTable b{{"s1", "s2", "s3"}, {"x", "y", "z", "w"}, testing::random_matrix(rng, 4, 3, 0.0, 1.0)};
  b.values(0, 0) = 1e-300;
  b.values(1, 1) = 0.1 + 0.2;
  write_beta_matrix(dir / "b.tsv", b);
  const BetaTable back = load_beta_matrix(dir / "b.tsv");
  EXPECT_EQ(back.values, b.values);
  EXPECT_EQ(back.site_ids, b.site_ids);
  EXPECT_EQ(back.sample_ids, b.sample_ids);

  const LabelTable l{{"x", "y"}, {1, 0}};
  write_labels(dir / "l.tsv", l);
  const LabelTable lb = load_labels(dir / "l.tsv");
  EXPECT_EQ(lb.sample_ids, l.sample_ids);
  EXPECT_EQ(lb.labels, l.labels);

  const std::vector<SiteGeneRow> sg{{"s1", "g1", 1.0}, {"s2", "g1", 1.0 / 3.0}};
  write_site_gene_map(dir / "sg.tsv", sg);
  const auto sgb = load_site_gene_map(dir / "sg.tsv");
  ASSERT_EQ(sgb.size(), 2u);
  EXPECT_EQ(sgb[1].strength, 1.0 / 3.0);

  const std::vector<GeneSet> sets{{"P1", "desc one", {"g1", "g2"}}, {"P2", "na", {"g3"}}};
  write_gmt(dir / "p.gmt", sets);
  const auto setsb = load_gmt(dir / "p.gmt");
  ASSERT_EQ(setsb.size(), 2u);
  EXPECT_EQ(setsb[0].genes, sets[0].genes);
  EXPECT_EQ(setsb[0].description, "desc one");
}

TEST(FormatDouble, SeventeenSignificantDigitsRoundTrip) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform();
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(LoadLabels, RejectsBadLabelsAndDuplicates) {
  const auto dir = scratch_dir("labels_bad");
  write_file(dir / "a.tsv", "sample_id\tlabel\nA\t2\n");
  EXPECT_THROW(load_labels(dir / "a.tsv"), ValidationError);
  write_file(dir / "b.tsv", "sample_id\tlabel\nA\t1\nA\t0\n");
  EXPECT_THROW(load_labels(dir / "b.tsv"), ValidationError);
}

TEST(LoadSiteGeneMap, DuplicateEdgeAndBadStrength) {
  const auto dir = scratch_dir("sg_bad");
  write_file(dir / "a.tsv", "site_id\tgene_id\ns1\tg1\ns1\tg1\n");
  EXPECT_THROW(load_site_gene_map(dir / "a.tsv"), ValidationError);
  write_file(dir / "b.tsv", "site_id\tgene_id\tstrength\ns1\tg1\t1.5\n");
  EXPECT_THROW(load_site_gene_map(dir / "b.tsv"), ValidationError);
  write_file(dir / "c.tsv", "site_id\tgene_id\ns1\tg1\n");
  EXPECT_EQ(load_site_gene_map(dir / "c.tsv")[0].strength, 1.0);
}

TEST(AssembleOntology, GmtLineWithThreeGenes) {
  const std::vector<SiteGeneRow> sg{{"s1", "g1", 1.0}, {"s2", "g2", 1.0}, {"s3", "g3", 1.0}};
  const OntologyBuild b = assemble_ontology(sg, {{"P", "d", {"g1", "g2", "g3"}}});
  EXPECT_EQ(b.ontology.pathway_ids().size(), 1u);
  EXPECT_EQ(b.ontology.gene_pathway_edges().size(), 3u);
  EXPECT_EQ(b.dropped_genes, 0u);
}

TEST(AssembleOntology, UnknownGmtGenesAreDroppedAndCounted) {
  const std::vector<SiteGeneRow> sg{{"s1", "g1", 1.0}};
  const OntologyBuild b = assemble_ontology(sg, {{"P", "d", {"g1", "gX", "gY"}}});
  EXPECT_EQ(b.dropped_genes, 2u);
  EXPECT_EQ(b.ontology.gene_ids(), std::vector<std::string>{"g1"});
}

TEST(AssembleOntology, StrengthReachesBuiltMask) {
  const auto dir = scratch_dir("strength");
  write_file(dir / "sg.tsv", "site_id\tgene_id\tstrength\ns1\tg1\t0.25\ns2\tg1\t1\n");
  write_file(dir / "p.gmt", "P\td\tg1\n");
  const OntologyBuild b = assemble_ontology(load_site_gene_map(dir / "sg.tsv"), load_gmt(dir / "p.gmt"));
  const std::vector<std::string> sites{"s1", "s2"};
  const MaskPair m = build_masks(b.ontology, sites);
  EXPECT_EQ(m.site_gene(0, 0), 0.25);
  EXPECT_EQ(m.site_gene(1, 0), 1.0);
}

TEST(AssembleDataset, JoinsLabelsBySampleId) {
  const BetaTable b{{"s"}, {"x", "y"}, Matrix::from_rows({{0.1}, {0.2}})};
  const TaskDataset d = assemble_dataset("t", b, LabelTable{{"y", "x"}, {0, 1}});
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0}));
  EXPECT_THROW(assemble_dataset("t", b, LabelTable{{"x"}, {1}}), ValidationError);
}

TaskDataset balanced(std::size_t n, std::size_t positives) {
  TaskDataset d;
  d.task_id = "t";
  d.site_ids = {"s"};
  d.betas = Matrix(n, 1, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    d.sample_ids.push_back("x" + std::to_string(i));
    d.labels.push_back(i < positives ? 1 : 0);
  }
  d.split.assign(n, SplitTag::train);
  return d;
}

std::array<std::array<std::size_t, 2>, 3> tally(const TaskDataset& d) {
  std::array<std::array<std::size_t, 2>, 3> c{};
  for (std::size_t i = 0; i < d.size(); ++i) ++c[static_cast<std::size_t>(d.split[i])][d.labels[i]];
  return c;
}

TEST(Split, HundredBalancedSamples) {
  Rng rng(3);
  const auto c = tally(split(balanced(100, 50), {}, rng));
  EXPECT_EQ(c[0][0] + c[0][1], 70u);
  EXPECT_EQ(c[1][0] + c[1][1], 15u);
  EXPECT_EQ(c[2][0] + c[2][1], 15u);
  EXPECT_EQ(c[0][0], 35u);
  EXPECT_EQ(c[0][1], 35u);
}

TEST(Split, AllTrainAndDeterminism) {
  Rng rng(4);
  const TaskDataset d = split(balanced(20, 7), {1.0, 0.0, 0.0}, rng);
  EXPECT_EQ(d.indices(SplitTag::train).size(), 20u);
  Rng a(5), b(5);
  EXPECT_EQ(split(balanced(40, 13), {}, a).split, split(balanced(40, 13), {}, b).split);
  Rng c(6);
  EXPECT_THROW(split(balanced(20, 2), {}, c), ValidationError);
  EXPECT_THROW(split(balanced(20, 10), {0.5, 0.5, 0.5}, c), ValidationError);
}

// Stratification holds to within one sample whenever every class is large
// enough to fill each split proportionally; smaller classes are instead
// guaranteed one member per split when the split has room for both.
TEST(SplitProperty, StratifiedWithinOneSample) {
  Rng sizes(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 10 + sizes.below(300);
    const std::size_t pos = 3 + sizes.below(n - 6);
    Rng rng(static_cast<std::uint64_t>(trial));
    const TaskDataset d = split(balanced(n, pos), {}, rng);
    const auto c = tally(d);
    const double ratio = static_cast<double>(pos) / static_cast<double>(n);
    const bool proportional = 0.15 * static_cast<double>(std::min(pos, n - pos)) >= 1.0;
    for (std::size_t s = 0; s < 3; ++s) {
      const std::size_t size = c[s][0] + c[s][1];
      if (proportional) {
        EXPECT_LE(std::abs(static_cast<double>(c[s][1]) - ratio * static_cast<double>(size)), 1.0 + 1e-9)
            << "n=" << n << " pos=" << pos << " split " << s;
      }
      if (size >= 2) {
        EXPECT_GE(c[s][0], 1u) << "n=" << n << " pos=" << pos << " split " << s;
        EXPECT_GE(c[s][1], 1u) << "n=" << n << " pos=" << pos << " split " << s;
      }
    }
  }
}

TEST(Synthetic, SameSeedIsIdentical) {
  const SyntheticData a = generate_synthetic(SynthConfig{});
  const SyntheticData b = generate_synthetic(SynthConfig{});
  ASSERT_EQ(a.tasks.size(), b.tasks.size());
  for (std::size_t t = 0; t < a.tasks.size(); ++t) {
    EXPECT_EQ(a.tasks[t].betas, b.tasks[t].betas);
    EXPECT_EQ(a.tasks[t].labels, b.tasks[t].labels);
  }
  EXPECT_EQ(a.truth.causal_pathways, b.truth.causal_pathways);
  SynthConfig other;
  other.seed = 2;
  EXPECT_NE(generate_synthetic(other).tasks[0].betas, a.tasks[0].betas);
}

TEST(SyntheticProperty, BetasInRangeAndBaseRateBalanced) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig c;
    c.seed = seed;
    const SyntheticData d = generate_synthetic(c);
    for (const TaskDataset& t : d.tasks) {
      t.validate();
      for (double v : t.betas.data()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
      const double rate =
          static_cast<double>(std::count(t.labels.begin(), t.labels.end(), 1)) / static_cast<double>(t.size());
      EXPECT_GE(rate, 0.2);
      EXPECT_LE(rate, 0.8);
    }
  }
}

TEST(Synthetic, FullySharedCausalSets) {
  SynthConfig c;
  c.shared_causal_fraction = 1.0;
  const SyntheticData d = generate_synthetic(c);
  for (std::size_t t = 1; t < d.truth.causal_pathways.size(); ++t)
    EXPECT_EQ(d.truth.causal_pathways[t], d.truth.causal_pathways[0]);
}

TEST(Synthetic, OntologyShape) {
  const SynthConfig c;
  const SyntheticData d = generate_synthetic(c);
  EXPECT_EQ(d.ontology.site_gene_edges().size(), c.n_sites);
  std::vector<std::size_t> per_gene(c.n_genes, 0);
  for (const Edge& e : d.ontology.gene_pathway_edges()) ++per_gene[e.from];
  for (std::size_t k : per_gene) {
    EXPECT_GE(k, 1u);
    EXPECT_LE(k, 3u);
  }
  EXPECT_THROW(generate_synthetic(SynthConfig{.n_pathways = 2}), ValidationError);
}

// Logistic regression on the true causal activations, fitted by gradient descent.
TEST(Synthetic, NoiselessProbeOnCausalActivations) {
  SynthConfig c;
  c.noise_sd = 0.0;
  const SyntheticData d = generate_synthetic(c);
  for (std::size_t t = 0; t < d.tasks.size(); ++t) {
    const auto& causal = d.truth.causal_pathways[t];
    const Matrix& a = d.truth.activations[t];
    const std::size_t n = a.rows(), k = causal.size();
    std::vector<double> w(k + 1, 0.0);
    for (int iter = 0; iter < 2000; ++iter) {
      std::vector<double> grad(k + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double z = w[k];
        for (std::size_t j = 0; j < k; ++j) z += w[j] * a(i, causal[j]);
        const double r = 1.0 / (1.0 + std::exp(-z)) - d.tasks[t].labels[i];
        for (std::size_t j = 0; j < k; ++j) grad[j] += r * a(i, causal[j]);
        grad[k] += r;
      }
      for (std::size_t j = 0; j <= k; ++j) w[j] -= 0.5 * grad[j] / static_cast<double>(n);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = w[k];
      for (std::size_t j = 0; j < k; ++j) z += w[j] * a(i, causal[j]);
      correct += static_cast<std::size_t>((z >= 0.0) == (d.tasks[t].labels[i] == 1));
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(n), 0.95) << "task " << t;
  }
}

TEST(Dataset, SelectSitesAndRows) {
  TaskDataset d = balanced(4, 2);
  d.site_ids = {"a", "b"};
  d.betas = Matrix::from_rows({{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}, {0.7, 0.8}});
  d.split = {SplitTag::train, SplitTag::test, SplitTag::train, SplitTag::val};
  const std::vector<std::string> sites{"b"};
  EXPECT_EQ(d.select_sites(sites).betas, Matrix::from_rows({{0.2}, {0.4}, {0.6}, {0.8}}));
  EXPECT_EQ(d.rows_with(SplitTag::train).sample_ids, (std::vector<std::string>{"x0", "x2"}));
  const std::vector<std::string> missing{"zz"};
  EXPECT_THROW(d.select_sites(missing), ValidationError);
}

}  // namespace
}  // namespace omvae
