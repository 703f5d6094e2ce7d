// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>

#include "omvae/checkpoint.hpp"
#include "omvae/error.hpp"

namespace omvae {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Typed access to one JSON object with key-path error messages.
class Section {
 public:
  Section(const json& node, std::string path, std::initializer_list<std::string_view> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(fmt::format("config: {} must be an object", where()));
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (std::string_view a : allowed) known = known || a == key;
      if (!known) throw ValidationError(fmt::format("config: unknown key '{}'", join(key)));
    }
  }

  bool has(std::string_view key) const { return node_.contains(key); }
  const json& raw(std::string_view key) const { return node_.at(std::string(key)); }
  std::string join(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  Section child(std::string_view key, std::initializer_list<std::string_view> allowed) const {
    return Section(raw(key), join(key), allowed);
  }

  double number(std::string_view key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError(fmt::format("config: {} must be a number", join(key)));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(fmt::format("config: {} must be finite", join(key)));
    return d;
  }

  std::uint64_t count(std::string_view key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return as_count(raw(key), join(key));
  }

  bool flag(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!raw(key).is_boolean()) throw ValidationError(fmt::format("config: {} must be true or false", join(key)));
    return raw(key).get<bool>();
  }

  std::string text(std::string_view key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!raw(key).is_string()) throw ValidationError(fmt::format("config: {} must be a string", join(key)));
    return raw(key).get<std::string>();
  }

  // A number or an array of numbers.
  std::vector<double> numbers(std::string_view key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number()) return {number(key, 0.0)};
    if (!v.is_array()) throw ValidationError(fmt::format("config: {} must be a number or an array", join(key)));
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ValidationError(fmt::format("config: {} must hold numbers only", join(key)));
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(std::string_view key, std::vector<std::size_t> fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) return {static_cast<std::size_t>(as_count(v, join(key)))};
    std::vector<std::size_t> out;
    for (const json& e : v) out.push_back(static_cast<std::size_t>(as_count(e, join(key))));
    return out;
  }

 private:
  static std::uint64_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ValidationError(fmt::format("config: {} must be a nonnegative integer", path));
    }
    return v.get<std::uint64_t>();
  }

  std::string where() const { return path_.empty() ? "the document" : path_; }

  const json& node_;
  std::string path_;
};

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

SynthConfig parse_synthetic(const Section& s) {
  const std::string preset = s.text("preset", "default");
  SynthConfig c;
  if (preset == "default") {
    c = SynthConfig::default_preset();
  } else if (preset == "six-task") {
    c = SynthConfig::six_task_preset();
  } else {
    throw ValidationError(fmt::format("config: {} must be 'default' or 'six-task'", s.join("preset")));
  }
  c.n_sites = s.count("n_sites", c.n_sites);
  c.n_genes = s.count("n_genes", c.n_genes);
  c.n_pathways = s.count("n_pathways", c.n_pathways);
  c.n_tasks = s.count("n_tasks", c.n_tasks);
  c.samples_per_task = s.counts("samples_per_task", c.samples_per_task);
  c.causal_pathways_per_task = s.count("causal_pathways_per_task", c.causal_pathways_per_task);
  c.shared_causal_fraction = s.number("shared_causal_fraction", c.shared_causal_fraction);
  c.noise_sd = s.number("noise_sd", c.noise_sd);
  c.label_scale = s.number("label_scale", c.label_scale);
  c.heldout_fraction = s.number("heldout_fraction", c.heldout_fraction);
  c.heldout_loading = s.number("heldout_loading", c.heldout_loading);
  c.validate();
  return c;
}

TrainPlan parse_train(const Section& s, TrainPlan plan) {
  if (s.has("epochs")) {
    const std::vector<std::size_t> e = s.counts("epochs", {});
    if (e.size() != 3) throw ValidationError(fmt::format("config: {} needs three entries", s.join("epochs")));
    plan.epochs = {e[0], e[1], e[2]};
  }
  plan.lr_stage1 = s.number("lr_stage1", plan.lr_stage1);
  plan.lr_finetune = s.number("lr_finetune", plan.lr_finetune);
  plan.batch_size = s.count("batch_size", plan.batch_size);
  plan.alpha = s.number("alpha", plan.alpha);
  plan.beta = s.number("beta", plan.beta);
  plan.gamma_policy = parse_gamma_policy(s.text("gamma_policy", std::string(gamma_policy_name(plan.gamma_policy))));
  plan.gamma_fixed = s.numbers("gamma_fixed", plan.gamma_fixed);
  plan.pwinval_threshold = s.numbers("pwinval_threshold", plan.pwinval_threshold);
  plan.pwinval_cap = s.number("pwinval_cap", plan.pwinval_cap);
  if (s.has("plateau")) {
    const Section p = s.child("plateau", {"factor", "patience", "min_lr"});
    plan.plateau.factor = p.number("factor", plan.plateau.factor);
    plan.plateau.patience = p.count("patience", plan.plateau.patience);
    plan.plateau.min_lr = p.number("min_lr", plan.plateau.min_lr);
  }
  return plan;
}

std::size_t task_count(const RunConfig& c) {
  return c.data.synthetic ? c.data.synthetic->n_tasks : c.data.tasks.size();
}

}  // namespace

RunConfig RunConfig::synthetic_default() {
  RunConfig c;
  c.data.synthetic = SynthConfig::default_preset();
  c.train.seed = c.seed;
  return c;
}

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  train.seed = value;
}

SynthConfig RunConfig::synthetic_config() const {
  if (!data.synthetic) throw ValidationError("config has no synthetic data source");
  SynthConfig s = *data.synthetic;
  s.seed = data.synthetic_seed.value_or(seed);
  return s;
}

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "omvae_out";
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config: invalid JSON: {}", e.what()));
  }
  const Section root(doc, "",
                     {"format_version", "seed", "output_dir", "data", "split", "selection", "masks", "model", "train",
                      "evaluation"});
  if (!root.has("format_version")) throw ValidationError("config: format_version is required");
  if (root.count("format_version", 0) != static_cast<std::uint64_t>(kConfigFormatVersion)) {
    throw ValidationError(fmt::format("config: format_version must be {}", kConfigFormatVersion));
  }

  RunConfig c;
  c.set_seed(root.count("seed", c.seed));
  c.output_dir = resolve(base_dir, root.text("output_dir", ""));

  if (!root.has("data")) throw ValidationError("config: data is required");
  const Section data = root.child("data", {"synthetic", "site_gene_map", "gmt", "tasks", "impute_mean"});
  if (data.has("synthetic")) {
    if (data.has("site_gene_map") || data.has("gmt") || data.has("tasks")) {
      throw ValidationError("config: data.synthetic cannot be combined with file inputs");
    }
    const Section synth =
        data.child("synthetic", {"preset", "n_sites", "n_genes", "n_pathways", "n_tasks", "samples_per_task",
                                 "causal_pathways_per_task", "shared_causal_fraction", "noise_sd", "label_scale",
                                 "heldout_fraction", "heldout_loading", "seed"});
    c.data.synthetic = parse_synthetic(synth);
    if (synth.has("seed")) c.data.synthetic_seed = synth.count("seed", 0);
  } else {
    for (std::string_view key : {"site_gene_map", "gmt", "tasks"})
      if (!data.has(key)) throw ValidationError(fmt::format("config: data.{} is required without data.synthetic", key));
    c.data.site_gene_map = resolve(base_dir, data.text("site_gene_map", ""));
    c.data.gmt = resolve(base_dir, data.text("gmt", ""));
    const json& tasks = data.raw("tasks");
    if (!tasks.is_array() || tasks.empty()) throw ValidationError("config: data.tasks must be a non-empty array");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const Section t(tasks[i], fmt::format("data.tasks[{}]", i), {"task_id", "betas", "labels"});
      for (std::string_view key : {"task_id", "betas", "labels"})
        if (!t.has(key)) throw ValidationError(fmt::format("config: {} is required", t.join(key)));
      c.data.tasks.push_back({t.text("task_id", ""), resolve(base_dir, t.text("betas", "")),
                              resolve(base_dir, t.text("labels", ""))});
    }
    c.data.impute_mean = data.flag("impute_mean", false);
  }

  if (root.has("split")) {
    const Section s = root.child("split", {"fractions"});
    const std::vector<double> f = s.numbers("fractions", {c.split.train, c.split.val, c.split.test});
    if (f.size() != 3) throw ValidationError("config: split.fractions needs three entries");
    c.split = {f[0], f[1], f[2]};
  }
  if (root.has("selection")) {
    const Section s = root.child("selection", {"enabled", "num_selected", "samples"});
    c.selection.enabled = s.flag("enabled", c.selection.enabled);
    if (s.has("num_selected") && !s.raw("num_selected").is_null()) c.selection.num_selected = s.count("num_selected", 0);
    const std::string samples = s.text("samples", "train");
    if (samples != "train" && samples != "all") {
      throw ValidationError("config: selection.samples must be 'train' or 'all'");
    }
    c.selection.train_only = samples == "train";
  }
  if (root.has("masks")) {
    const Section s = root.child("masks", {"holdout_fraction", "substitute", "open_candidates"});
    c.masks.holdout_fraction = s.number("holdout_fraction", c.masks.holdout_fraction);
    c.masks.substitute = s.number("substitute", c.masks.substitute);
    c.masks.open_candidates = s.flag("open_candidates", c.masks.open_candidates);
    if (!(c.masks.holdout_fraction >= 0.0 && c.masks.holdout_fraction <= 1.0)) {
      throw ValidationError("config: masks.holdout_fraction must lie in [0,1]");
    }
    if (!(c.masks.substitute >= 0.0 && c.masks.substitute <= 1.0)) {
      throw ValidationError("config: masks.substitute must lie in [0,1]");
    }
  }
  if (root.has("model")) c.hidden = root.child("model", {"hidden"}).count("hidden", c.hidden);
  if (c.hidden == 0) throw ValidationError("config: model.hidden must be at least 1");
  if (root.has("train")) {
    c.train = parse_train(root.child("train", {"epochs", "lr_stage1", "lr_finetune", "batch_size", "alpha", "beta",
                                               "gamma_policy", "gamma_fixed", "pwinval_threshold", "pwinval_cap",
                                               "plateau"}),
                          c.train);
  }
  c.train.seed = c.seed;
  if (root.has("evaluation")) c.threshold = root.child("evaluation", {"threshold"}).number("threshold", c.threshold);
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw ValidationError("config: evaluation.threshold must lie in [0,1]");

  c.train.validate(task_count(c));
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open config {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

json to_json(const RunConfig& c) {
  json data;
  if (c.data.synthetic) {
    const SynthConfig& s = *c.data.synthetic;
    data["synthetic"] = {{"n_sites", s.n_sites},
                         {"n_genes", s.n_genes},
                         {"n_pathways", s.n_pathways},
                         {"n_tasks", s.n_tasks},
                         {"samples_per_task", s.samples_per_task},
                         {"causal_pathways_per_task", s.causal_pathways_per_task},
                         {"shared_causal_fraction", s.shared_causal_fraction},
                         {"noise_sd", s.noise_sd},
                         {"label_scale", s.label_scale},
                         {"heldout_fraction", s.heldout_fraction},
                         {"heldout_loading", s.heldout_loading}};
    if (c.data.synthetic_seed) data["synthetic"]["seed"] = *c.data.synthetic_seed;
  } else {
    data["site_gene_map"] = c.data.site_gene_map.string();
    data["gmt"] = c.data.gmt.string();
    data["tasks"] = json::array();
    for (const TaskFiles& t : c.data.tasks)
      data["tasks"].push_back({{"task_id", t.task_id}, {"betas", t.betas.string()}, {"labels", t.labels.string()}});
    data["impute_mean"] = c.data.impute_mean;
  }
  const TrainPlan& p = c.train;
  json selection = {{"enabled", c.selection.enabled}, {"samples", c.selection.train_only ? "train" : "all"}};
  selection["num_selected"] = c.selection.num_selected ? json(*c.selection.num_selected) : json(nullptr);
  return {{"format_version", kConfigFormatVersion},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"data", data},
          {"split", {{"fractions", {c.split.train, c.split.val, c.split.test}}}},
          {"selection", selection},
          {"masks",
           {{"holdout_fraction", c.masks.holdout_fraction},
            {"substitute", c.masks.substitute},
            {"open_candidates", c.masks.open_candidates}}},
          {"model", {{"hidden", c.hidden}}},
          {"train",
           {{"epochs", p.epochs},
            {"lr_stage1", p.lr_stage1},
            {"lr_finetune", p.lr_finetune},
            {"batch_size", p.batch_size},
            {"alpha", p.alpha},
            {"beta", p.beta},
            {"gamma_policy", gamma_policy_name(p.gamma_policy)},
            {"gamma_fixed", p.gamma_fixed},
            {"pwinval_threshold", p.pwinval_threshold},
            {"pwinval_cap", p.pwinval_cap},
            {"plateau", {{"factor", p.plateau.factor}, {"patience", p.plateau.patience}, {"min_lr", p.plateau.min_lr}}}}},
          {"evaluation", {{"threshold", c.threshold}}}};
}

std::string config_digest(const RunConfig& config) {
  json doc = to_json(config);
  doc.erase("output_dir");
  return "fnv1a64:" + fnv1a64_hex(doc.dump());
}

}  // namespace omvae
