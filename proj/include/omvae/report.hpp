// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "omvae/dataset.hpp"
#include "omvae/layers.hpp"
#include "omvae/model.hpp"
#include "omvae/ontology.hpp"
#include "omvae/training.hpp"

namespace omvae {

// TSV with header sample_id, task_id, label, mu_1..mu_p; rows follow task
// then sample order. Without a split every sample is exported.
std::string export_embeddings(const MultiTaskVae& model, std::span<const TaskDataset> datasets,
                              std::optional<SplitTag> split = std::nullopt);

inline constexpr std::size_t kDefaultHistogramBins = 50;

struct WeightHistogram {
  std::string layer;
  std::vector<double> edges;  // bins + 1 uniform edges over the observed range
  std::vector<std::size_t> ones;
  std::vector<std::size_t> masked;
  std::vector<std::size_t> non_ones;

  // Header bin_lo,bin_hi,ones,masked,non_ones.
  std::string to_csv() const;
};

// Histograms of stored weights split by position class. The last bin is
// closed on the right; a constant layer gets the range [v - 0.5, v + 0.5].
WeightHistogram weight_distributions(std::string_view name, const MaskedLinear& layer,
                                     const Matrix& mask_original, std::span<const Cell> heldout,
                                     std::size_t bins = kDefaultHistogramBins);

struct RankedCell {
  Cell cell;
  double magnitude = 0.0;
  bool heldout = false;
};

struct Recovery {
  std::vector<RankedCell> ranking;  // candidate pool by |effective weight| descending, ties row-major
  std::size_t top_k = 0;
  std::size_t hits = 0;     // held-out edges among the top k
  double recovery = 0.0;    // hits / #held-out
  double chance = 0.0;      // k / pool, the expected recovery of a random ranking
};

// Candidate pool: held-out edges plus every non-edge of the original mask
// that the layer's own mask leaves trainable. With top_k = pool size
// recovery is 1.
Recovery recover_heldout(const MaskedLinear& layer, const Matrix& mask_original, std::span<const Cell> heldout,
                         std::size_t top_k);

// Weight and mask transposed, bias zero: a decoder layer in its encoder's
// orientation.
MaskedLinear transposed(const MaskedLinear& layer);

// Header rank,row,col,abs_weight,heldout using row/col id names.
std::string recovery_tsv(const Recovery& recovery, std::span<const std::string> row_ids,
                         std::span<const std::string> col_ids);

struct RunAccuracy {
  std::uint64_t seed = 0;
  Accuracy accuracy;
};

// {per_task_accuracy, mean_accuracy, std, config_digest, split, runs}. With
// several runs, per-task values are averaged and std is the sample standard
// deviation of the run means (0 for a single run).
nlohmann::json metrics_json(std::span<const RunAccuracy> runs, std::span<const std::string> task_ids,
                            SplitTag split, std::string_view config_digest);

// Dumps with two-space indent and a trailing newline.
std::string dump_json(const nlohmann::json& doc);

}  // namespace omvae
