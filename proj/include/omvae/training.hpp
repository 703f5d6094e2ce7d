// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "omvae/dataset.hpp"
#include "omvae/model.hpp"
#include "omvae/rng.hpp"

namespace omvae {

enum class GammaPolicy {
  fixed,             // TrainPlan::gamma_fixed
  uniform,           // all ones
  pwinval,           // piecewise in validation accuracy, continuous at the threshold
  pwinval_verbatim,  // second branch W(1+acc)/(1-s): rises with accuracy, jumps at s
};

std::string_view gamma_policy_name(GammaPolicy policy);
GammaPolicy parse_gamma_policy(std::string_view name);

struct PlateauConfig {
  double factor = 0.5;
  std::size_t patience = 10;
  double min_lr = 1e-6;
};

struct TrainPlan {
  std::array<std::size_t, 3> epochs{400, 50, 50};
  double lr_stage1 = 1e-3;
  double lr_finetune = 1e-4;  // stages 2 and 3
  std::size_t batch_size = 32;
  double alpha = 1.0;
  double beta = 0.01;
  GammaPolicy gamma_policy = GammaPolicy::uniform;
  std::vector<double> gamma_fixed;
  std::vector<double> pwinval_threshold{0.9};  // one entry per task, or one shared entry
  double pwinval_cap = 2.0;
  PlateauConfig plateau;
  std::uint64_t seed = 1;

  void validate(std::size_t tasks) const;
};

// γ_i = ((W-1)/s_i)·acc_i + 1 up to the threshold, then W(1-acc_i)/(1-s_i).
std::vector<double> pwinval_weights(std::span<const double> val_acc, std::span<const double> thresholds,
                                    double w_cap, bool verbatim = false);

struct PlateauState {
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t epochs_since_improvement = 0;
  double current_lr = 0.0;
};

// Maximizing scheduler: lr shrinks after more than `patience` epochs without improvement.
PlateauState plateau_step(PlateauState state, double metric, const PlateauConfig& config);

struct Accuracy {
  std::vector<double> per_task;
  double mean = 0.0;
};

// Predicts from the posterior mean; a probability ≥ threshold is class 1.
Accuracy evaluate(const MultiTaskVae& model, std::span<const TaskDataset> datasets, SplitTag split,
                  double threshold = 0.5);

struct BatchRef {
  std::size_t task = 0;
  std::size_t index = 0;  // batch number within the task
  std::vector<std::size_t> rows;
};

// Shuffles each task's training rows and interleaves their batches round-robin.
std::vector<BatchRef> batch_schedule(std::span<const TaskDataset> datasets, std::size_t batch_size,
                                     std::uint64_t seed, std::size_t stage, std::size_t epoch);

struct EpochReport {
  std::size_t stage = 0;
  std::size_t epoch = 0;  // 1-based within the stage
  std::vector<LossBreakdown> task_loss;  // batch means per task
  std::vector<std::size_t> task_batches;
  double mean_train_loss = 0.0;  // mean of batch totals
  std::vector<double> val_accuracy;
  double mean_val_accuracy = 0.0;
  double lr = 0.0;
  std::vector<double> gamma;

  nlohmann::json to_json() const;
};

struct StageContext {
  std::size_t stage = 1;
  std::size_t epoch = 1;
  double lr = 0.0;
  std::vector<double> gamma;
};

// One pass over every training sample. Stages 1 and 3 update the autoencoder
// and the batch's head with the composite loss; stage 2 updates only the
// batch's head with its weighted BCE.
EpochReport run_epoch(MultiTaskVae& model, std::span<const TaskDataset> datasets, const TrainPlan& plan,
                      const StageContext& ctx, ParamStore& store);

using ReportSink = std::function<void(const EpochReport&)>;

struct TrainingResult {
  std::vector<EpochReport> reports;
  Accuracy final_val;
};

// Expects datasets already restricted to the model's site columns, with a
// non-empty train and val split per task. The model is trained in place.
TrainingResult train_three_stage(MultiTaskVae& model, std::span<const TaskDataset> datasets,
                                 const TrainPlan& plan, const ReportSink& sink = {});

}  // namespace omvae
