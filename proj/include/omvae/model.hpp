// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omvae/layers.hpp"
#include "omvae/matrix.hpp"
#include "omvae/ontology.hpp"
#include "omvae/optim.hpp"
#include "omvae/rng.hpp"

namespace omvae {

struct ModelDims {
  std::size_t sites = 0;
  std::size_t genes = 0;
  std::size_t pathways = 0;
  std::size_t tasks = 0;
  std::size_t hidden = 0;
  bool operator==(const ModelDims&) const = default;
};

inline constexpr std::size_t kDefaultHidden = 32;
inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;
// Initial log σ² bias: the posterior starts narrow (σ ≈ 0.14) so early
// samples of z are not dominated by noise while μ is still small.
inline constexpr double kLogvarBiasInit = -4.0;

// Ontology-masked variational autoencoder with one classifier head per task.
//
//   encoder  sites ─[site→gene mask]→ σ → genes ─[gene→pathway mask]→ μ
//                                            └─[gene→pathway mask]→ log σ²
//   decoder  z ─[pathway→gene = maskᵀ]→ σ ─[gene→site = maskᵀ]→ σ → x̂
//   head i   z → dense(hidden) → relu → dense(1) → σ
//
// Layers are stored in a fixed order (see layer_names()); parameters() lists
// weight then bias of each layer in that order.
class MultiTaskVae {
 public:
  // All parameters zero; call initialize() for a trainable model.
  MultiTaskVae(const MaskPair& masks, std::size_t tasks, std::size_t hidden = kDefaultHidden);

  // Rebuilds a model from stored layers (checkpoint loading). Verifies the
  // structural invariants: μ and log σ² heads share one mask, decoder masks
  // are transposes of encoder masks, and classifier shapes agree.
  static MultiTaskVae from_layers(std::vector<MaskedLinear> layers);

  // Masked Glorot weights from one {kInit, layer} stream per layer, zero
  // biases except the log σ² head (kLogvarBiasInit).
  void initialize(std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }

  const MaskedLinear& enc_site_gene() const { return layers_[0]; }
  const MaskedLinear& enc_mu() const { return layers_[1]; }
  const MaskedLinear& enc_logvar() const { return layers_[2]; }
  const MaskedLinear& dec_pathway_gene() const { return layers_[3]; }
  const MaskedLinear& dec_gene_site() const { return layers_[4]; }
  const MaskedLinear& classifier_hidden(std::size_t task) const;
  const MaskedLinear& classifier_output(std::size_t task) const;

  const std::vector<MaskedLinear>& layers() const { return layers_; }
  std::vector<MaskedLinear>& mutable_layers() { return layers_; }
  std::vector<std::string> layer_names() const;
  const MaskedLinear& layer(std::string_view name) const;
  MaskedLinear& mutable_layer(std::string_view name);

  std::vector<ParamRef> parameters();
  std::vector<const Matrix*> parameter_values() const;
  std::vector<std::string> parameter_names() const;

  static std::string layer_name(std::size_t index);
  static ParamGroup layer_group(std::size_t index);

 private:
  MultiTaskVae() = default;
  void check_structure() const;

  ModelDims dims_;
  std::vector<MaskedLinear> layers_;
};

struct Encoding {
  Matrix gene_activation;  // b×g
  Matrix mu;               // b×p
  Matrix logvar;           // b×p, clamped to [-10, 10]
};

Encoding encode(const MultiTaskVae& model, const Matrix& x);

enum class LatentMode { sample, mean };

// sample: z = μ + exp(½ log σ²) ⊙ ε with ε ~ N(0, I) from `rng`; mean: z = μ.
Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng* rng, LatentMode mode);

struct KlValue {
  double value = 0.0;
  Matrix grad_mu;
  Matrix grad_logvar;
};

// Batch mean of -½ Σ_j (1 + log σ² - μ² - σ²) against the N(0, I) prior.
KlValue kl_divergence(const Matrix& mu, const Matrix& logvar);

Matrix decode(const MultiTaskVae& model, const Matrix& z);
// b×1 probabilities from head `task`.
Matrix classify(const MultiTaskVae& model, const Matrix& z, std::size_t task);

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.01;
  std::vector<double> gamma;

  void validate(std::size_t tasks) const;
};

struct LossBreakdown {
  double total = 0.0;
  double recon_mse = 0.0;
  double kl = 0.0;
  std::vector<double> bce;  // one entry per task; zero for tasks absent from the batch
};

// Aligned with MultiTaskVae::parameters().
using GradientSet = std::vector<Matrix>;

enum class GradientScope {
  full,             // encoder, decoder and the active head
  classifier_only,  // the active head only; autoencoder gradients left zero
};

struct LossEvaluation {
  LossBreakdown breakdown;
  GradientSet gradients;
};

// α·MSE(x, x̂) + β·KL + γ_task·BCE(head_task(z), labels) for a batch drawn
// from one task. Heads of other tasks get zero gradient.
LossEvaluation composite_loss(const MultiTaskVae& model, const Matrix& x,
                              std::span<const double> labels, std::size_t task,
                              const LossWeights& weights, Rng* rng, LatentMode mode,
                              GradientScope scope = GradientScope::full);

}  // namespace omvae
