// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "omvae/dataset.hpp"
#include "omvae/synthetic.hpp"
#include "omvae/training.hpp"

namespace omvae {

inline constexpr int kConfigFormatVersion = 1;
inline constexpr const char* kOutDirEnv = "OMVAE_OUT_DIR";

struct TaskFiles {
  std::string task_id;
  std::filesystem::path betas;
  std::filesystem::path labels;
};

struct DataSource {
  // Either a synthetic benchmark or files on disk.
  std::optional<SynthConfig> synthetic;
  // Generator seed; follows the run seed when unset.
  std::optional<std::uint64_t> synthetic_seed;
  std::filesystem::path site_gene_map;
  std::filesystem::path gmt;
  std::vector<TaskFiles> tasks;
  bool impute_mean = false;
};

struct SelectionOptions {
  bool enabled = false;
  std::optional<std::size_t> num_selected;
  bool train_only = true;  // score sites on training samples only
};

struct MaskOptions {
  // For synthetic data with planted held-out edges this is ignored and the
  // planted set is used.
  double holdout_fraction = 0.0;
  double substitute = 1.0;
  bool open_candidates = false;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;
  DataSource data;
  SplitFractions split;
  SelectionOptions selection;
  MaskOptions masks;
  std::size_t hidden = 32;
  TrainPlan train;
  double threshold = 0.5;

  // Defaults with a synthetic default-preset data source.
  static RunConfig synthetic_default();

  // Sets the run seed (training, splits, hold-out and, unless pinned, the
  // synthetic generator).
  void set_seed(std::uint64_t seed);
  // The synthetic generator settings with the effective seed filled in.
  SynthConfig synthetic_config() const;
};

// Relative data paths resolve against `base_dir`. Unknown keys, wrong types
// and out-of-range values raise ValidationError naming the key path.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Output directory, when unset: $OMVAE_OUT_DIR, else "omvae_out".
std::filesystem::path default_output_dir();

nlohmann::json to_json(const RunConfig& config);

// Digest of the canonical JSON with output_dir removed, so the same
// experiment written to two places shares one digest.
std::string config_digest(const RunConfig& config);

}  // namespace omvae
