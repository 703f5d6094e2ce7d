// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "omvae/checkpoint.hpp"
#include "omvae/error.hpp"
#include "omvae/losses.hpp"
#include "omvae/model.hpp"
#include "omvae/pipeline.hpp"
#include "test_util.hpp"

namespace omvae {
namespace {

using testing::random_mask;
using testing::random_matrix;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void set_layer(MultiTaskVae& model, std::string_view name, Matrix w, Matrix b) {
  MaskedLinear& layer = model.mutable_layer(name);
  layer.mutable_weight() = std::move(w);
  layer.mutable_bias() = std::move(b);
}

// 2 sites, 1 gene, 1 pathway, hidden width 2.
MultiTaskVae hand_model() {
  const MaskPair masks{Matrix::from_rows({{1}, {1}}), Matrix::from_rows({{1}}), {}};
  MultiTaskVae m(masks, 1, 2);
  set_layer(m, "enc_site_gene", Matrix::from_rows({{0.5}, {-1.0}}), Matrix::from_rows({{0.2}}));
  set_layer(m, "enc_mu", Matrix::from_rows({{2.0}}), Matrix::from_rows({{-0.5}}));
  set_layer(m, "enc_logvar", Matrix::from_rows({{-1.0}}), Matrix::from_rows({{0.1}}));
  set_layer(m, "dec_pathway_gene", Matrix::from_rows({{1.5}}), Matrix::from_rows({{-0.3}}));
  set_layer(m, "dec_gene_site", Matrix::from_rows({{0.7, -0.4}}), Matrix::from_rows({{0.1, 0.2}}));
  set_layer(m, "classifier0.hidden", Matrix::from_rows({{1.0, -2.0}}), Matrix::from_rows({{0.5, 0.25}}));
  set_layer(m, "classifier0.output", Matrix::from_rows({{0.75}, {-1.25}}), Matrix::from_rows({{0.1}}));
  return m;
}

MultiTaskVae random_model(std::uint64_t seed, std::size_t n = 12, std::size_t g = 5, std::size_t p = 3,
                          std::size_t t = 2) {
  Rng rng(seed);
  const MaskPair masks{random_mask(rng, n, g, 0.4), random_mask(rng, g, p, 0.6), {}};
  MultiTaskVae m(masks, t, 4);
  m.initialize(seed);
  return m;
}

TEST(Encode, HandModelMatchesSigmoidAffineChain) {
  const MultiTaskVae m = hand_model();
  const Encoding e = encode(m, Matrix::from_rows({{0.4, 0.9}}));
  const double gene = sig(0.5 * 0.4 - 1.0 * 0.9 + 0.2);
  EXPECT_NEAR(e.gene_activation(0, 0), gene, 1e-15);
  EXPECT_NEAR(e.mu(0, 0), 2.0 * gene - 0.5, 1e-15);
  EXPECT_NEAR(e.logvar(0, 0), -gene + 0.1, 1e-15);
}

TEST(Encode, ZeroMasksGiveBiasForEverySample) {
  const MaskPair masks{Matrix(3, 2), Matrix(2, 2), {}};
  MultiTaskVae m(masks, 1, 2);
  set_layer(m, "enc_mu", Matrix(2, 2), Matrix::from_rows({{0.3, -0.6}}));
  const Encoding e = encode(m, Matrix::from_rows({{0.1, 0.2, 0.3}, {0.9, 0.8, 0.7}}));
  EXPECT_EQ(e.mu, Matrix::from_rows({{0.3, -0.6}, {0.3, -0.6}}));
}

TEST(Encode, LogvarIsClamped) {
  MultiTaskVae m = hand_model();
  set_layer(m, "enc_logvar", Matrix::from_rows({{0.0}}), Matrix::from_rows({{50.0}}));
  EXPECT_EQ(encode(m, Matrix(1, 2, 0.5)).logvar(0, 0), kLogvarMax);
  set_layer(m, "enc_logvar", Matrix::from_rows({{0.0}}), Matrix::from_rows({{-50.0}}));
  EXPECT_EQ(encode(m, Matrix(1, 2, 0.5)).logvar(0, 0), kLogvarMin);
}

TEST(Encode, IdenticalRowsGiveIdenticalMu) {
  const MultiTaskVae m = random_model(1);
  Rng rng(2);
  const Matrix row = random_matrix(rng, 1, 12, 0.0, 1.0);
  Matrix x(3, 12);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 12; ++c) x(r, c) = row(0, c);
  const Encoding e = encode(m, x);
  for (std::size_t r = 1; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(e.mu(r, c), e.mu(0, c));
  EXPECT_THROW(encode(m, Matrix(1, 11)), ShapeError);
}

TEST(Reparameterize, MeanModeReturnsMu) {
  const Matrix mu = Matrix::from_rows({{0.3, -2.0}});
  EXPECT_EQ(reparameterize(mu, Matrix(1, 2, 3.0), nullptr, LatentMode::mean), mu);
}

TEST(Reparameterize, VanishingVarianceStaysAtMu) {
  Rng rng(3);
  const Matrix mu = Matrix::from_rows({{0.3, -2.0, 5.0}});
  const Matrix z = reparameterize(mu, Matrix(1, 3, -20.0), &rng, LatentMode::sample);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_LT(std::abs(z(0, j) - mu(0, j)), 1e-4);
}

TEST(Reparameterize, UnitVarianceSampleVariance) {
  Rng rng(4);
  const std::size_t n = 10000;
  const Matrix z = reparameterize(Matrix(n, 1), Matrix(n, 1), &rng, LatentMode::sample);
  double mean = 0.0;
  for (double v : z.data()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : z.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  EXPECT_GE(var, 0.94);
  EXPECT_LE(var, 1.06);
}

TEST(Kl, HandValues) {
  EXPECT_EQ(kl_divergence(Matrix(2, 3), Matrix(2, 3)).value, 0.0);
  EXPECT_DOUBLE_EQ(kl_divergence(Matrix(1, 1, 1.0), Matrix(1, 1)).value, 0.5);
  const double kl = kl_divergence(Matrix(1, 1), Matrix(1, 1, std::log(4.0))).value;
  EXPECT_NEAR(kl, 0.5 * (4.0 - std::log(4.0) - 1.0), 1e-14);
  EXPECT_NEAR(kl, 0.8069, 1e-4);
}

TEST(Kl, AveragesOverBatchAndSumsOverLatent) {
  const Matrix mu = Matrix::from_rows({{1, 0}, {0, 0}});
  EXPECT_DOUBLE_EQ(kl_divergence(mu, Matrix(2, 2)).value, 0.25);
}

TEST(KlProperty, NonNegativeOnRandomDraws) {
  Rng rng(5);
  const Matrix mu = random_matrix(rng, 10000, 1, -5.0, 5.0);
  const Matrix logvar = random_matrix(rng, 10000, 1, -10.0, 10.0);
  for (std::size_t i = 0; i < 10000; ++i) {
    const KlValue kl = kl_divergence(Matrix(1, 1, mu(i, 0)), Matrix(1, 1, logvar(i, 0)));
    ASSERT_GE(kl.value, 0.0) << "mu=" << mu(i, 0) << " logvar=" << logvar(i, 0);
  }
}

TEST(Decode, HandModelMatchesSigmoidChain) {
  const MultiTaskVae m = hand_model();
  const Matrix x_hat = decode(m, Matrix::from_rows({{0.6}}));
  const double gene = sig(1.5 * 0.6 - 0.3);
  EXPECT_NEAR(x_hat(0, 0), sig(0.7 * gene + 0.1), 1e-15);
  EXPECT_NEAR(x_hat(0, 1), sig(-0.4 * gene + 0.2), 1e-15);
}

TEST(Decode, ZeroMasksGiveConstantOutput) {
  const MaskPair masks{Matrix(2, 1), Matrix(1, 1), {}};
  MultiTaskVae m(masks, 1, 2);
  set_layer(m, "dec_gene_site", Matrix(1, 2), Matrix::from_rows({{0.4, -0.4}}));
  const Matrix a = decode(m, Matrix::from_rows({{-3.0}})), b = decode(m, Matrix::from_rows({{7.0}}));
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a(0, 0), sig(0.4), 1e-15);
}

TEST(DecodeProperty, OutputsInUnitInterval) {
  const MultiTaskVae m = random_model(6);
  Rng rng(7);
  const Matrix x_hat = decode(m, random_matrix(rng, 200, 3, -50.0, 50.0));
  for (double v : x_hat.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Classify, ZeroModelGivesHalf) {
  const MultiTaskVae m(MaskPair{Matrix(2, 1, 1.0), Matrix(1, 2, 1.0), {}}, 2, 3);
  Rng rng(8);
  const Matrix p = classify(m, random_matrix(rng, 4, 2), 1);
  for (double v : p.data()) EXPECT_EQ(v, 0.5);
  EXPECT_THROW(classify(m, Matrix(1, 2), 2), ValidationError);
}

TEST(Classify, HandNetwork) {
  MultiTaskVae m(MaskPair{Matrix(2, 1, 1.0), Matrix(1, 2, 1.0), {}}, 1, 2);
  set_layer(m, "classifier0.hidden", Matrix::from_rows({{1.0, -1.0}, {0.5, 2.0}}), Matrix::from_rows({{0.0, -0.5}}));
  set_layer(m, "classifier0.output", Matrix::from_rows({{2.0}, {-1.0}}), Matrix::from_rows({{0.3}}));
  const Matrix p = classify(m, Matrix::from_rows({{1.0, 2.0}, {1.0, 2.0}}), 0);
  const double h0 = std::max(0.0, 1.0 + 1.0), h1 = std::max(0.0, -1.0 + 4.0 - 0.5);
  EXPECT_NEAR(p(0, 0), sig(2.0 * h0 - h1 + 0.3), 1e-15);
  EXPECT_EQ(p(0, 0), p(1, 0));
}

TEST(CompositeLoss, HandSumOfTerms) {
  const MultiTaskVae m = hand_model();
  const Matrix x = Matrix::from_rows({{0.4, 0.9}, {0.1, 0.3}});
  const std::vector<double> labels{1.0, 0.0};
  const LossWeights w{1.0, 1.0, {1.0}};
  const LossEvaluation ev = composite_loss(m, x, labels, 0, w, nullptr, LatentMode::mean);

  double recon = 0.0, kl = 0.0, ce = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    const double gene = sig(0.5 * x(r, 0) - 1.0 * x(r, 1) + 0.2);
    const double mu = 2.0 * gene - 0.5, lv = -gene + 0.1;
    const double dg = sig(1.5 * mu - 0.3);
    recon += std::pow(x(r, 0) - sig(0.7 * dg + 0.1), 2) + std::pow(x(r, 1) - sig(-0.4 * dg + 0.2), 2);
    kl += -0.5 * (1.0 + lv - mu * mu - std::exp(lv));
    const double h0 = std::max(0.0, mu + 0.5), h1 = std::max(0.0, -2.0 * mu + 0.25);
    const double p = sig(0.75 * h0 - 1.25 * h1 + 0.1);
    ce += labels[r] == 1.0 ? -std::log(p) : -std::log(1.0 - p);
  }
  recon /= 4.0;
  kl /= 2.0;
  ce /= 2.0;
  EXPECT_NEAR(ev.breakdown.recon_mse, recon, 1e-12);
  EXPECT_NEAR(ev.breakdown.kl, kl, 1e-12);
  EXPECT_NEAR(ev.breakdown.bce[0], ce, 1e-12);
  EXPECT_NEAR(ev.breakdown.total, recon + kl + ce, 1e-10);
}

TEST(CompositeLoss, AlphaOnlyIsPlainAutoencoderMse) {
  const MultiTaskVae m = random_model(9);
  Rng rng(10);
  const Matrix x = random_matrix(rng, 5, 12, 0.0, 1.0);
  const std::vector<double> labels{1, 0, 1, 0, 1};
  const LossEvaluation ev = composite_loss(m, x, labels, 1, LossWeights{1.0, 0.0, {0.0, 0.0}}, nullptr, LatentMode::mean);
  EXPECT_EQ(ev.breakdown.total, mse(x, decode(m, encode(m, x).mu)).value);
  EXPECT_EQ(ev.breakdown.bce[0], 0.0);
}

TEST(CompositeLossProperty, AdditivityAndDeterminism) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const MultiTaskVae m = random_model(seed);
    Rng rng(seed + 100);
    const Matrix x = random_matrix(rng, 6, 12, 0.0, 1.0);
    std::vector<double> labels;
    for (int i = 0; i < 6; ++i) labels.push_back(static_cast<double>(rng.below(2)));
    const LossWeights w{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), {rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)}};
    const std::size_t task = seed % 2;
    const LossEvaluation a = composite_loss(m, x, labels, task, w, nullptr, LatentMode::mean);
    const LossBreakdown& b = a.breakdown;
    double expect = w.alpha * b.recon_mse + w.beta * b.kl;
    for (std::size_t t = 0; t < 2; ++t) expect += w.gamma[t] * b.bce[t];
    EXPECT_NEAR(b.total, expect, 1e-12);
    EXPECT_EQ(b.bce[1 - task], 0.0);

    const LossEvaluation again = composite_loss(m, x, labels, task, w, nullptr, LatentMode::mean);
    EXPECT_EQ(again.breakdown.total, b.total);
    EXPECT_EQ(again.breakdown.bce, b.bce);
    EXPECT_EQ(again.gradients, a.gradients);
  }
}

TEST(CompositeLoss, GradientsReachOnlyActiveHead) {
  const MultiTaskVae m = random_model(11);
  Rng rng(12);
  const Matrix x = random_matrix(rng, 4, 12, 0.0, 1.0);
  const std::vector<double> labels{1, 0, 0, 1};
  const LossEvaluation ev = composite_loss(m, x, labels, 0, LossWeights{1, 1, {1, 1}}, nullptr, LatentMode::mean);
  const auto names = m.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].rfind("classifier1.", 0) == 0) {
      EXPECT_EQ(count_nonzero(ev.gradients[i]), 0u) << names[i];
    }

  const LossEvaluation head = composite_loss(m, x, labels, 0, LossWeights{1, 1, {1, 1}}, nullptr, LatentMode::mean,
                                             GradientScope::classifier_only);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].rfind("classifier", 0) != 0) {
      EXPECT_EQ(count_nonzero(head.gradients[i]), 0u) << names[i];
    }
}

TEST(CompositeLoss, RejectsMismatchedLabels) {
  const MultiTaskVae m = random_model(13);
  const std::vector<double> labels{1, 0};
  EXPECT_THROW(composite_loss(m, Matrix(3, 12), labels, 0, LossWeights{1, 1, {1, 1}}, nullptr, LatentMode::mean),
               ShapeError);
  EXPECT_THROW(composite_loss(m, Matrix(2, 12), labels, 0, LossWeights{1, 1, {1}}, nullptr, LatentMode::mean),
               ValidationError);
}

TEST(GradientCheck, FullModelBelowTolerance) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GradCheckReport r = gradcheck_tiny_model(seed);
    EXPECT_LT(r.max_relative_error, 1e-5) << "seed " << seed << " worst " << r.worst_parameter;
    EXPECT_GT(r.entries_checked, 0u);
  }
}

TEST(Model, StructureInvariants) {
  const MultiTaskVae m = random_model(14);
  EXPECT_EQ(m.enc_mu().mask(), m.enc_logvar().mask());
  EXPECT_EQ(m.dec_pathway_gene().mask(), transpose(m.enc_mu().mask()));
  EXPECT_EQ(m.dec_gene_site().mask(), transpose(m.enc_site_gene().mask()));
  EXPECT_THROW(MultiTaskVae(MaskPair{Matrix(3, 2), Matrix(3, 2), {}}, 1), ShapeError);
  EXPECT_THROW(MultiTaskVae(MaskPair{Matrix(3, 2), Matrix(2, 2), {}}, 0), ValidationError);
}

TEST(Model, InitializeIsDeterministicPerSeed) {
  const MultiTaskVae a = random_model(15), b = random_model(15);
  ASSERT_EQ(a.layers().size(), b.layers().size());
  for (std::size_t i = 0; i < a.layers().size(); ++i) EXPECT_EQ(a.layers()[i].weight(), b.layers()[i].weight());
  for (double v : a.enc_logvar().bias().data()) EXPECT_EQ(v, kLogvarBiasInit);
}

TEST(Checkpoint, RoundTripIsExact) {
  const MultiTaskVae m = random_model(16);
  const MaskPair masks{m.enc_site_gene().mask(), m.enc_mu().mask(), {}};
  const std::string json = checkpoint_to_json(m, "digest-x");
  const MultiTaskVae back = checkpoint_from_json(json, masks);
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    EXPECT_EQ(back.layers()[i].weight(), m.layers()[i].weight());
    EXPECT_EQ(back.layers()[i].bias(), m.layers()[i].bias());
  }
  EXPECT_EQ(checkpoint_to_json(back, "digest-x"), json);
}

TEST(Checkpoint, RejectsMaskMismatch) {
  const MultiTaskVae m = random_model(17);
  Matrix other = m.enc_site_gene().mask();
  other(0, 0) = 1.0 - other(0, 0);
  const MaskPair masks{other, m.enc_mu().mask(), {}};
  try {
    checkpoint_from_json(checkpoint_to_json(m), masks);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("digest"), std::string::npos);
  }
  EXPECT_THROW(checkpoint_from_json("{not json", masks), ValidationError);
}

}  // namespace
}  // namespace omvae
