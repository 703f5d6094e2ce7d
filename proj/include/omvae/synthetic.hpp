// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "omvae/dataset.hpp"
#include "omvae/matrix.hpp"
#include "omvae/ontology.hpp"

namespace omvae {

// Synthetic multi-task methylation benchmark with a planted ontology.
//
// Recipe (every draw comes from a substream of `seed`):
//  1. Each site links to one gene chosen uniformly; each gene links to 1-3
//     distinct pathways chosen uniformly. All strengths are 1.
//  2. round(shared_causal_fraction × k) causal pathways are shared by every
//     task; each task draws its remaining k - shared from the other pathways.
//     Every causal pathway gets a planted weight ±label_scale.
//  3. Per sample, pathway activations a ~ N(0, I). The label is 1 with
//     probability σ(w·a_causal + c) where the per-task intercept c is minus
//     the median score, so base rates sit near one half.
//  4. Site beta = σ(loading_site × gene_signal + N(0, noise_sd²)), where
//     gene_signal is the mean activation of the gene's pathways and loadings
//     are ±U(0.5, 1.5).
//
// With heldout_fraction > 0, that fraction of site→gene edges is recorded
// as held out and those sites get loading ±heldout_loading, planting a strong
// signal on exactly the hidden edges.
struct SynthConfig {
  std::size_t n_sites = 300;
  std::size_t n_genes = 60;
  std::size_t n_pathways = 12;
  std::size_t n_tasks = 3;
  // One entry per task, or a single entry used for every task.
  std::vector<std::size_t> samples_per_task{300};
  std::size_t causal_pathways_per_task = 3;
  double shared_causal_fraction = 0.7;
  double noise_sd = 0.3;
  double label_scale = 20.0;
  double heldout_fraction = 0.0;
  double heldout_loading = 4.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t samples_for_task(std::size_t task) const;

  static SynthConfig default_preset();
  // Six tasks sized like the public 450K cohorts (2093 samples in total).
  static SynthConfig six_task_preset();
};

struct GroundTruth {
  std::vector<std::vector<std::size_t>> causal_pathways;  // per task, ascending
  std::vector<std::vector<double>> planted_weights;       // aligned with causal_pathways
  std::vector<double> intercepts;
  std::vector<double> site_loadings;
  std::vector<std::size_t> site_gene;   // gene index of every site
  std::vector<Cell> heldout_site_gene;  // (site, gene) ontology indices
  std::vector<Matrix> activations;      // per task, samples × pathways
};

struct SyntheticData {
  Ontology ontology;
  std::vector<TaskDataset> tasks;
  GroundTruth truth;
};

SyntheticData generate_synthetic(const SynthConfig& config);

}  // namespace omvae
