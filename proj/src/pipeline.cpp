// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/pipeline.hpp"

#include <unordered_map>

#include <fmt/format.h>

#include "omvae/data_io.hpp"
#include "omvae/error.hpp"
#include "omvae/rng.hpp"

namespace omvae {
namespace {

void load_sources(const RunConfig& config, Experiment& exp) {
  if (config.data.synthetic) {
    SyntheticData data = generate_synthetic(config.synthetic_config());
    exp.ontology = std::move(data.ontology);
    exp.datasets = std::move(data.tasks);
    exp.truth = std::move(data.truth);
    return;
  }
  OntologyBuild build = assemble_ontology(load_site_gene_map(config.data.site_gene_map), load_gmt(config.data.gmt));
  if (build.dropped_genes > 0) {
    fmt::print(stderr, "warning: {} gene-set members absent from the site-gene map were dropped\n", build.dropped_genes);
  }
  exp.ontology = std::move(build.ontology);
  for (const TaskFiles& t : config.data.tasks) {
    exp.datasets.push_back(assemble_dataset(t.task_id, load_beta_matrix(t.betas, LoadOptions{config.data.impute_mean}),
                                            load_labels(t.labels)));
  }
}

}  // namespace

std::vector<std::string> Experiment::task_ids() const {
  std::vector<std::string> ids;
  for (const TaskDataset& d : datasets) ids.push_back(d.task_id);
  return ids;
}

Experiment prepare_experiment(const RunConfig& config) {
  Experiment exp;
  load_sources(config, exp);
  if (exp.datasets.empty()) throw ValidationError("no tasks to train on");

  for (std::size_t t = 0; t < exp.datasets.size(); ++t) {
    Rng rng = Rng::derive(config.seed, {stream::kSplit, t});
    exp.datasets[t] = split(std::move(exp.datasets[t]), config.split, rng);
  }

  if (config.selection.enabled) {
    std::vector<TaskDataset> scoring;
    for (const TaskDataset& d : exp.datasets) scoring.push_back(config.selection.train_only ? d.rows_with(SplitTag::train) : d);
    SelectionResult selected = select_sites_with_scores(scoring, config.selection.num_selected);
    if (selected.sites.empty()) throw ValidationError("site selection kept no sites");
    exp.sites = std::move(selected.sites);
    exp.scores = std::move(selected.scores);
  } else {
    exp.sites = exp.datasets.front().site_ids;
  }
  for (TaskDataset& d : exp.datasets) d = d.select_sites(exp.sites);

  exp.original_masks = build_masks(exp.ontology, exp.sites);
  exp.masks = exp.original_masks;
  const HoldoutOptions options{config.masks.substitute, config.masks.open_candidates};
  HoldoutResult held;
  if (exp.truth && !exp.truth->heldout_site_gene.empty()) {
    std::unordered_map<std::size_t, std::size_t> row_of;
    for (std::size_t r = 0; r < exp.sites.size(); ++r) row_of[*exp.ontology.site_index(exp.sites[r])] = r;
    std::vector<Cell> cells;
    for (const Cell& c : exp.truth->heldout_site_gene)
      if (auto it = row_of.find(c.row); it != row_of.end()) cells.push_back({it->second, c.col});
    held = apply_holdout(exp.original_masks.site_gene, std::move(cells), options);
  } else {
    Rng rng = Rng::derive(config.seed, {stream::kHoldout});
    held = holdout(exp.original_masks.site_gene, config.masks.holdout_fraction, rng, options);
  }
  exp.masks.site_gene = std::move(held.masked);
  for (const Cell& c : held.heldout) exp.masks.heldout.push_back({Tier::site_gene, c});
  return exp;
}

MultiTaskVae build_model(const Experiment& experiment, const RunConfig& config, std::uint64_t seed) {
  MultiTaskVae model(experiment.masks, experiment.datasets.size(), config.hidden);
  model.initialize(seed);
  return model;
}

GradCheckReport gradcheck_tiny_model(std::uint64_t seed, double epsilon) {
  constexpr std::size_t n = 30, g = 10, p = 4, h = 6, tasks = 2, batch = 6;
  Rng rng(seed);
  MaskPair masks{Matrix(n, g), Matrix(g, p), {}};
  // Every site and gene keeps at least one edge so no unit is disconnected.
  for (std::size_t s = 0; s < n; ++s) masks.site_gene(s, rng.below(g)) = 1.0;
  for (std::size_t k = 0; k < g; ++k) masks.gene_pathway(k, rng.below(p)) = 1.0;
  for (double& v : masks.site_gene.data())
    if (rng.uniform() < 0.15) v = 1.0;
  for (double& v : masks.gene_pathway.data())
    if (rng.uniform() < 0.3) v = 1.0;

  MultiTaskVae model(masks, tasks, h);
  model.initialize(seed);
  // Nonzero biases so their gradients are exercised away from the origin.
  for (MaskedLinear& layer : model.mutable_layers())
    for (double& b : layer.mutable_bias().data()) b = rng.uniform(-0.3, 0.3);

  std::vector<Matrix> inputs;
  std::vector<std::vector<double>> labels;
  for (std::size_t t = 0; t < tasks; ++t) {
    Matrix x(batch, n);
    for (double& v : x.data()) v = rng.uniform();
    inputs.push_back(std::move(x));
    std::vector<double> y;
    for (std::size_t i = 0; i < batch; ++i) y.push_back(static_cast<double>(i % 2));
    labels.push_back(std::move(y));
  }
  const LossWeights weights{1.0, 1.0, std::vector<double>(tasks, 1.0)};

  GradientSet analytic;
  for (std::size_t t = 0; t < tasks; ++t) {
    LossEvaluation e = composite_loss(model, inputs[t], labels[t], t, weights, nullptr, LatentMode::mean);
    if (analytic.empty()) {
      analytic = std::move(e.gradients);
    } else {
      for (std::size_t i = 0; i < analytic.size(); ++i) analytic[i] = elementwise(analytic[i], e.gradients[i], ElementOp::add);
    }
  }
  auto terms = [&] {
    std::vector<double> out;
    for (std::size_t t = 0; t < tasks; ++t) {
      const LossBreakdown b = composite_loss(model, inputs[t], labels[t], t, weights, nullptr, LatentMode::mean).breakdown;
      out.push_back(weights.alpha * b.recon_mse);
      out.push_back(weights.beta * b.kl);
      out.push_back(weights.gamma[t] * b.bce[t]);
    }
    return out;
  };
  const std::vector<ParamRef> params = model.parameters();
  return grad_check_terms(terms, params, analytic, epsilon);
}

}  // namespace omvae
