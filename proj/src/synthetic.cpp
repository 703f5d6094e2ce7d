// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "omvae/error.hpp"
#include "omvae/layers.hpp"
#include "omvae/rng.hpp"

namespace omvae {
namespace {

// Substream keys under stream::kSynthetic.
constexpr std::uint64_t kOntologyStream = 1;
constexpr std::uint64_t kCausalStream = 2;
constexpr std::uint64_t kLoadingStream = 3;
constexpr std::uint64_t kHoldoutStream = 4;
constexpr std::uint64_t kSampleStream = 100;

std::vector<std::size_t> choose_distinct(Rng& rng, std::vector<std::size_t> pool, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_sites == 0 || n_genes == 0 || n_pathways == 0 || n_tasks == 0) {
    throw ValidationError("synthetic dimensions must all be at least 1");
  }
  if (samples_per_task.size() != 1 && samples_per_task.size() != n_tasks) {
    throw ValidationError(fmt::format("samples_per_task has {} entries for {} tasks", samples_per_task.size(), n_tasks));
  }
  for (std::size_t s : samples_per_task)
    if (s < 4) throw ValidationError("each synthetic task needs at least 4 samples");
  if (causal_pathways_per_task == 0 || causal_pathways_per_task > n_pathways) {
    throw ValidationError(fmt::format("causal_pathways_per_task must be in [1, {}]", n_pathways));
  }
  if (!(shared_causal_fraction >= 0.0 && shared_causal_fraction <= 1.0)) {
    throw ValidationError("shared_causal_fraction must lie in [0,1]");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be >= 0");
  if (!(label_scale > 0.0) || !std::isfinite(label_scale)) throw ValidationError("label_scale must be > 0");
  if (!(heldout_fraction >= 0.0 && heldout_fraction <= 1.0)) throw ValidationError("heldout_fraction must lie in [0,1]");
  if (!(heldout_loading > 0.0) || !std::isfinite(heldout_loading)) throw ValidationError("heldout_loading must be > 0");
}

std::size_t SynthConfig::samples_for_task(std::size_t task) const {
  return samples_per_task.size() == 1 ? samples_per_task[0] : samples_per_task.at(task);
}

SynthConfig SynthConfig::default_preset() { return SynthConfig{}; }

SynthConfig SynthConfig::six_task_preset() {
  SynthConfig c;
  c.n_tasks = 6;
  c.samples_per_task = {184, 379, 279, 219, 689, 343};
  return c;
}

SyntheticData generate_synthetic(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.n_sites, g = config.n_genes, p = config.n_pathways;

  // 1. Ontology.
  Rng onto_rng = Rng::derive(config.seed, {stream::kSynthetic, kOntologyStream});
  std::vector<std::string> site_ids, gene_ids, pathway_ids;
  for (std::size_t i = 0; i < n; ++i) site_ids.push_back(fmt::format("site{:05d}", i));
  for (std::size_t i = 0; i < g; ++i) gene_ids.push_back(fmt::format("gene{:04d}", i));
  for (std::size_t i = 0; i < p; ++i) pathway_ids.push_back(fmt::format("pathway{:03d}", i));

  GroundTruth truth;
  std::vector<Edge> sg_edges, gp_edges;
  for (std::size_t s = 0; s < n; ++s) {
    const auto gene = static_cast<std::size_t>(onto_rng.below(g));
    truth.site_gene.push_back(gene);
    sg_edges.push_back({s, gene, 1.0});
  }
  std::vector<std::size_t> all_pathways(p);
  std::iota(all_pathways.begin(), all_pathways.end(), 0);
  std::vector<std::vector<std::size_t>> gene_pathways(g);
  for (std::size_t gene = 0; gene < g; ++gene) {
    const std::size_t count = std::min<std::size_t>(1 + onto_rng.below(3), p);
    gene_pathways[gene] = choose_distinct(onto_rng, all_pathways, count);
    for (std::size_t pw : gene_pathways[gene]) gp_edges.push_back({gene, pw, 1.0});
  }

  // 2. Causal pathways and planted weights.
  Rng causal_rng = Rng::derive(config.seed, {stream::kSynthetic, kCausalStream});
  const std::size_t k = config.causal_pathways_per_task;
  const auto shared_count =
      static_cast<std::size_t>(std::llround(config.shared_causal_fraction * static_cast<double>(k)));
  const std::vector<std::size_t> shared = choose_distinct(causal_rng, all_pathways, shared_count);
  std::vector<std::size_t> rest;
  std::set_difference(all_pathways.begin(), all_pathways.end(), shared.begin(), shared.end(), std::back_inserter(rest));
  for (std::size_t t = 0; t < config.n_tasks; ++t) {
    std::vector<std::size_t> causal = choose_distinct(causal_rng, rest, k - shared_count);
    causal.insert(causal.end(), shared.begin(), shared.end());
    std::sort(causal.begin(), causal.end());
    std::vector<double> w;
    for (std::size_t i = 0; i < causal.size(); ++i)
      w.push_back(causal_rng.uniform() < 0.5 ? -config.label_scale : config.label_scale);
    truth.causal_pathways.push_back(std::move(causal));
    truth.planted_weights.push_back(std::move(w));
  }

  // Held-out edges and site loadings.
  if (config.heldout_fraction > 0.0) {
    Matrix sg_mask(n, g);
    for (const Edge& e : sg_edges) sg_mask(e.from, e.to) = 1.0;
    Rng holdout_rng = Rng::derive(config.seed, {stream::kSynthetic, kHoldoutStream});
    truth.heldout_site_gene = holdout(sg_mask, config.heldout_fraction, holdout_rng).heldout;
  }
  Rng loading_rng = Rng::derive(config.seed, {stream::kSynthetic, kLoadingStream});
  for (std::size_t s = 0; s < n; ++s) {
    const double sign = loading_rng.uniform() < 0.5 ? -1.0 : 1.0;
    truth.site_loadings.push_back(sign * loading_rng.uniform(0.5, 1.5));
  }
  for (const Cell& c : truth.heldout_site_gene) {
    truth.site_loadings[c.row] = (truth.site_loadings[c.row] < 0.0 ? -1.0 : 1.0) * config.heldout_loading;
  }

  // 3-4. Samples.
  SyntheticData data{Ontology(site_ids, gene_ids, pathway_ids, std::move(sg_edges), std::move(gp_edges)), {}, {}};
  for (std::size_t t = 0; t < config.n_tasks; ++t) {
    Rng rng = Rng::derive(config.seed, {stream::kSynthetic, kSampleStream, t});
    const std::size_t samples = config.samples_for_task(t);
    Matrix activations = gaussian_sample(rng, samples, p);

    std::vector<double> scores(samples, 0.0);
    const auto& causal = truth.causal_pathways[t];
    const auto& w = truth.planted_weights[t];
    for (std::size_t i = 0; i < samples; ++i)
      for (std::size_t c = 0; c < causal.size(); ++c) scores[i] += w[c] * activations(i, causal[c]);
    const double intercept = -median(scores);

    TaskDataset task;
    task.task_id = fmt::format("task{}", t);
    task.site_ids = site_ids;
    task.betas = Matrix(samples, n);
    for (std::size_t i = 0; i < samples; ++i) {
      task.sample_ids.push_back(fmt::format("task{}_s{:04d}", t, i));
      task.labels.push_back(rng.uniform() < sigmoid(scores[i] + intercept) ? 1 : 0);
    }
    std::vector<double> gene_signal(g);
    for (std::size_t i = 0; i < samples; ++i) {
      for (std::size_t gene = 0; gene < g; ++gene) {
        double sum = 0.0;
        for (std::size_t pw : gene_pathways[gene]) sum += activations(i, pw);
        gene_signal[gene] = sum / static_cast<double>(gene_pathways[gene].size());
      }
      for (std::size_t s = 0; s < n; ++s) {
        const double noise = config.noise_sd * rng.normal();
        task.betas(i, s) = sigmoid(truth.site_loadings[s] * gene_signal[truth.site_gene[s]] + noise);
      }
    }
    task.split.assign(samples, SplitTag::train);
    truth.intercepts.push_back(intercept);
    truth.activations.push_back(std::move(activations));
    data.tasks.push_back(std::move(task));
  }
  data.truth = std::move(truth);
  return data;
}

}  // namespace omvae
