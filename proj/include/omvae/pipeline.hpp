// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omvae/config.hpp"
#include "omvae/dataset.hpp"
#include "omvae/grad_check.hpp"
#include "omvae/model.hpp"
#include "omvae/ontology.hpp"
#include "omvae/selection.hpp"
#include "omvae/synthetic.hpp"

namespace omvae {

struct Experiment {
  Ontology ontology;
  std::vector<std::string> sites;      // model input columns, in order
  std::vector<TaskDataset> datasets;   // split-tagged, restricted to `sites`
  std::vector<std::vector<SiteScore>> scores;  // per task, when selection ran
  MaskPair original_masks;             // before hold-out
  MaskPair masks;                      // as used by the model
  std::optional<GroundTruth> truth;    // synthetic data only

  std::vector<std::string> task_ids() const;
};

// Load or generate data, split every task with its own {kSplit, task}
// stream, optionally select sites, build masks and apply the hold-out.
// Synthetic data with planted held-out edges uses that set; otherwise
// masks.holdout_fraction of site→gene edges are drawn from the kHoldout stream.
Experiment prepare_experiment(const RunConfig& config);

MultiTaskVae build_model(const Experiment& experiment, const RunConfig& config, std::uint64_t seed);

// Central-difference check of the composite loss on a random 30-site,
// 10-gene, 4-pathway, two-task model with hidden width 6, posterior-mean mode.
// Both heads are covered by summing one batch per task.
GradCheckReport gradcheck_tiny_model(std::uint64_t seed, double epsilon = 1e-6);

}  // namespace omvae
