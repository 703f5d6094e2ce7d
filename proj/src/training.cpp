// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/training.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "omvae/error.hpp"

namespace omvae {
namespace {

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

std::vector<double> current_gamma(const TrainPlan& plan, std::size_t tasks, const Accuracy& val) {
  switch (plan.gamma_policy) {
    case GammaPolicy::fixed:
      return plan.gamma_fixed;
    case GammaPolicy::uniform:
      return std::vector<double>(tasks, 1.0);
    case GammaPolicy::pwinval:
    case GammaPolicy::pwinval_verbatim:
      return pwinval_weights(val.per_task, plan.pwinval_threshold, plan.pwinval_cap,
                             plan.gamma_policy == GammaPolicy::pwinval_verbatim);
  }
  throw Error("unknown gamma policy");
}

std::vector<std::size_t> active_parameters(const std::vector<ParamRef>& params, std::size_t stage,
                                           std::size_t task) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamGroup& g = params[i].group;
    const bool head = g.kind == ParamGroup::Kind::classifier && g.task == task;
    if (head || (stage != 2 && g.is_autoencoder())) active.push_back(i);
  }
  return active;
}

}  // namespace

std::string_view gamma_policy_name(GammaPolicy policy) {
  switch (policy) {
    case GammaPolicy::fixed: return "fixed";
    case GammaPolicy::uniform: return "uniform";
    case GammaPolicy::pwinval: return "pwinval";
    case GammaPolicy::pwinval_verbatim: return "pwinval-verbatim";
  }
  return "?";
}

GammaPolicy parse_gamma_policy(std::string_view name) {
  for (GammaPolicy p : {GammaPolicy::fixed, GammaPolicy::uniform, GammaPolicy::pwinval, GammaPolicy::pwinval_verbatim})
    if (gamma_policy_name(p) == name) return p;
  throw ValidationError(fmt::format("unknown gamma policy '{}' (fixed, uniform, pwinval, pwinval-verbatim)", name));
}

void TrainPlan::validate(std::size_t tasks) const {
  if (!(lr_stage1 > 0.0) || !std::isfinite(lr_stage1)) throw ValidationError("stage-1 learning rate must be > 0");
  if (!(lr_finetune > 0.0) || !std::isfinite(lr_finetune)) throw ValidationError("fine-tune learning rate must be > 0");
  if (lr_finetune > lr_stage1) throw ValidationError("fine-tune learning rate must not exceed the stage-1 rate");
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
  if (!finite_nonnegative(alpha) || !finite_nonnegative(beta)) throw ValidationError("alpha and beta must be finite and >= 0");
  if (gamma_policy == GammaPolicy::fixed) {
    if (gamma_fixed.size() != tasks) {
      throw ValidationError(fmt::format("fixed gamma has {} entries for {} tasks", gamma_fixed.size(), tasks));
    }
    for (double g : gamma_fixed)
      if (!finite_nonnegative(g)) throw ValidationError("fixed gamma entries must be finite and >= 0");
  }
  if (pwinval_threshold.size() != 1 && pwinval_threshold.size() != tasks) {
    throw ValidationError(fmt::format("pwinval threshold has {} entries for {} tasks", pwinval_threshold.size(), tasks));
  }
  for (double s : pwinval_threshold)
    if (!(s > 0.0 && s < 1.0)) throw ValidationError(fmt::format("pwinval threshold {} must lie in (0,1)", s));
  if (!(pwinval_cap > 1.0) || !std::isfinite(pwinval_cap)) throw ValidationError("pwinval cap must be > 1");
  if (!(plateau.factor > 0.0 && plateau.factor < 1.0)) throw ValidationError("plateau factor must lie in (0,1)");
  if (!finite_nonnegative(plateau.min_lr)) throw ValidationError("plateau min_lr must be finite and >= 0");
}

std::vector<double> pwinval_weights(std::span<const double> val_acc, std::span<const double> thresholds,
                                    double w_cap, bool verbatim) {
  if (thresholds.size() != 1 && thresholds.size() != val_acc.size()) {
    throw ValidationError(fmt::format("{} thresholds for {} tasks", thresholds.size(), val_acc.size()));
  }
  if (!(w_cap > 1.0) || !std::isfinite(w_cap)) throw DomainError(fmt::format("w_cap must be > 1, got {}", w_cap));
  std::vector<double> gamma;
  gamma.reserve(val_acc.size());
  for (std::size_t i = 0; i < val_acc.size(); ++i) {
    const double acc = val_acc[i];
    const double s = thresholds.size() == 1 ? thresholds[0] : thresholds[i];
    if (!(s > 0.0 && s < 1.0)) throw DomainError(fmt::format("threshold {} outside (0,1)", s));
    if (!(acc >= 0.0 && acc <= 1.0)) throw DomainError(fmt::format("validation accuracy {} outside [0,1]", acc));
    if (acc <= s) {
      gamma.push_back((w_cap - 1.0) / s * acc + 1.0);
    } else if (verbatim) {
      gamma.push_back(w_cap * (1.0 + acc) / (1.0 - s));
    } else {
      gamma.push_back(w_cap * (1.0 - acc) / (1.0 - s));
    }
  }
  return gamma;
}

PlateauState plateau_step(PlateauState state, double metric, const PlateauConfig& config) {
  if (metric > state.best_metric + 1e-12) {
    state.best_metric = metric;
    state.epochs_since_improvement = 0;
    return state;
  }
  if (++state.epochs_since_improvement > config.patience) {
    state.current_lr = std::max(state.current_lr * config.factor, config.min_lr);
    state.epochs_since_improvement = 0;
  }
  return state;
}

Accuracy evaluate(const MultiTaskVae& model, std::span<const TaskDataset> datasets, SplitTag split,
                  double threshold) {
  if (datasets.size() != model.dims().tasks) {
    throw ValidationError(fmt::format("{} datasets for a model with {} tasks", datasets.size(), model.dims().tasks));
  }
  Accuracy result;
  for (std::size_t t = 0; t < datasets.size(); ++t) {
    const std::vector<std::size_t> rows = datasets[t].indices(split);
    if (rows.empty()) {
      throw ValidationError(fmt::format("task '{}' has no {} samples", datasets[t].task_id, split_name(split)));
    }
    const Matrix prob = classify(model, encode(model, gather_rows(datasets[t].betas, rows)).mu, t);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int predicted = prob(i, 0) >= threshold ? 1 : 0;
      if (predicted == datasets[t].labels[rows[i]]) ++correct;
    }
    result.per_task.push_back(static_cast<double>(correct) / static_cast<double>(rows.size()));
  }
  double sum = 0.0;
  for (double a : result.per_task) sum += a;
  result.mean = sum / static_cast<double>(result.per_task.size());
  return result;
}

std::vector<BatchRef> batch_schedule(std::span<const TaskDataset> datasets, std::size_t batch_size,
                                     std::uint64_t seed, std::size_t stage, std::size_t epoch) {
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
  std::vector<std::vector<std::size_t>> order;
  for (std::size_t t = 0; t < datasets.size(); ++t) {
    std::vector<std::size_t> rows = datasets[t].indices(SplitTag::train);
    if (rows.empty()) throw ValidationError(fmt::format("task '{}' has an empty train split", datasets[t].task_id));
    Rng rng = Rng::derive(seed, {stream::kShuffle, stage, epoch, t});
    rng.shuffle(std::span<std::size_t>(rows));
    order.push_back(std::move(rows));
  }
  std::vector<BatchRef> schedule;
  for (std::size_t b = 0;; ++b) {
    bool any = false;
    for (std::size_t t = 0; t < order.size(); ++t) {
      const std::size_t begin = b * batch_size;
      if (begin >= order[t].size()) continue;
      const std::size_t end = std::min(begin + batch_size, order[t].size());
      schedule.push_back({t, b, std::vector<std::size_t>(order[t].begin() + begin, order[t].begin() + end)});
      any = true;
    }
    if (!any) break;
  }
  return schedule;
}

nlohmann::json EpochReport::to_json() const {
  nlohmann::json losses = nlohmann::json::array();
  for (std::size_t t = 0; t < task_loss.size(); ++t) {
    const LossBreakdown& b = task_loss[t];
    losses.push_back({{"batches", task_batches[t]},
                      {"total", b.total},
                      {"recon_mse", b.recon_mse},
                      {"kl", b.kl},
                      {"bce", b.bce[t]}});
  }
  return {{"stage", stage},
          {"epoch", epoch},
          {"mean_train_loss", mean_train_loss},
          {"task_loss", losses},
          {"val_accuracy", val_accuracy},
          {"mean_val_accuracy", mean_val_accuracy},
          {"lr", lr},
          {"gamma", gamma}};
}

EpochReport run_epoch(MultiTaskVae& model, std::span<const TaskDataset> datasets, const TrainPlan& plan,
                      const StageContext& ctx, ParamStore& store) {
  const std::size_t tasks = model.dims().tasks;
  if (datasets.size() != tasks) {
    throw ValidationError(fmt::format("{} datasets for a model with {} tasks", datasets.size(), tasks));
  }
  if (ctx.stage < 1 || ctx.stage > 3) throw ValidationError(fmt::format("stage {} is not 1, 2 or 3", ctx.stage));
  for (const TaskDataset& d : datasets) {
    if (d.site_ids.size() != model.dims().sites) {
      throw ValidationError(fmt::format("task '{}' has {} sites; the model expects {}", d.task_id, d.site_ids.size(),
                                        model.dims().sites));
    }
  }

  const LossWeights weights = ctx.stage == 2 ? LossWeights{0.0, 0.0, ctx.gamma} : LossWeights{plan.alpha, plan.beta, ctx.gamma};
  const GradientScope scope = ctx.stage == 2 ? GradientScope::classifier_only : GradientScope::full;

  EpochReport report;
  report.stage = ctx.stage;
  report.epoch = ctx.epoch;
  report.lr = ctx.lr;
  report.gamma = ctx.gamma;
  report.task_loss.assign(tasks, LossBreakdown{0.0, 0.0, 0.0, std::vector<double>(tasks, 0.0)});
  report.task_batches.assign(tasks, 0);

  double total_sum = 0.0;
  const std::vector<BatchRef> schedule = batch_schedule(datasets, plan.batch_size, plan.seed, ctx.stage, ctx.epoch);
  for (const BatchRef& batch : schedule) {
    const TaskDataset& d = datasets[batch.task];
    const Matrix x = gather_rows(d.betas, batch.rows);
    std::vector<double> labels;
    labels.reserve(batch.rows.size());
    for (std::size_t r : batch.rows) labels.push_back(static_cast<double>(d.labels[r]));

    Rng noise = Rng::derive(plan.seed, {stream::kNoise, ctx.stage, ctx.epoch, batch.task, batch.index});
    LossEvaluation eval = composite_loss(model, x, labels, batch.task, weights, &noise, LatentMode::sample, scope);

    const std::vector<ParamRef> params = model.parameters();
    std::vector<ParamRef> active;
    std::vector<Matrix> grads;
    for (std::size_t i : active_parameters(params, ctx.stage, batch.task)) {
      active.push_back(params[i]);
      grads.push_back(std::move(eval.gradients[i]));
    }
    adam_step(store, active, grads, ctx.lr);

    LossBreakdown& acc = report.task_loss[batch.task];
    acc.total += eval.breakdown.total;
    acc.recon_mse += eval.breakdown.recon_mse;
    acc.kl += eval.breakdown.kl;
    acc.bce[batch.task] += eval.breakdown.bce[batch.task];
    ++report.task_batches[batch.task];
    total_sum += eval.breakdown.total;
  }

  for (std::size_t t = 0; t < tasks; ++t) {
    const auto n = static_cast<double>(report.task_batches[t]);
    if (n == 0.0) continue;
    LossBreakdown& b = report.task_loss[t];
    b.total /= n;
    b.recon_mse /= n;
    b.kl /= n;
    b.bce[t] /= n;
  }
  report.mean_train_loss = total_sum / static_cast<double>(schedule.size());
  return report;
}

TrainingResult train_three_stage(MultiTaskVae& model, std::span<const TaskDataset> datasets,
                                 const TrainPlan& plan, const ReportSink& sink) {
  const std::size_t tasks = model.dims().tasks;
  plan.validate(tasks);

  TrainingResult result;
  Accuracy val = evaluate(model, datasets, SplitTag::val);
  PlateauState plateau;
  plateau.current_lr = plan.lr_finetune;

  for (std::size_t stage = 1; stage <= 3; ++stage) {
    ParamStore store;
    for (std::size_t epoch = 1; epoch <= plan.epochs[stage - 1]; ++epoch) {
      const StageContext ctx{stage, epoch, stage == 1 ? plan.lr_stage1 : plateau.current_lr,
                             current_gamma(plan, tasks, val)};
      EpochReport report = run_epoch(model, datasets, plan, ctx, store);
      val = evaluate(model, datasets, SplitTag::val);
      report.val_accuracy = val.per_task;
      report.mean_val_accuracy = val.mean;
      if (stage >= 2) plateau = plateau_step(plateau, val.mean, plan.plateau);
      if (sink) sink(report);
      result.reports.push_back(std::move(report));
    }
  }
  result.final_val = val;
  return result;
}

}  // namespace omvae
