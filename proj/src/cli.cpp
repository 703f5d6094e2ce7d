// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "omvae/checkpoint.hpp"
#include "omvae/config.hpp"
#include "omvae/data_io.hpp"
#include "omvae/error.hpp"
#include "omvae/pipeline.hpp"
#include "omvae/report.hpp"
#include "omvae/selection.hpp"
#include "omvae/training.hpp"

namespace omvae {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("--config", opts.config, "Run configuration JSON (default: built-in synthetic preset)");
  cmd.add_option("--seed", opts.seed, "Override the run seed");
  cmd.add_option("--out", opts.out, "Output directory (default: config output_dir, then $OMVAE_OUT_DIR, then omvae_out)");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig config = opts.config.empty() ? RunConfig::synthetic_default() : load_run_config(opts.config);
  if (opts.seed) config.set_seed(*opts.seed);
  if (!opts.out.empty()) {
    config.output_dir = opts.out;
  } else if (config.output_dir.empty()) {
    config.output_dir = default_output_dir();
  }
  fs::create_directories(config.output_dir);
  return config;
}

std::string matrix_tsv(const Matrix& m, std::string_view corner, std::span<const std::string> row_ids,
                       std::span<const std::string> col_ids) {
  std::string out(corner);
  for (const std::string& c : col_ids) out += "\t" + c;
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += row_ids[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out += "\t" + format_double(m(r, c));
    out += '\n';
  }
  return out;
}

std::string scores_tsv(const std::vector<SiteScore>& scores) {
  std::string out = "site_id\tt_stat\tdf\tp_value\n";
  for (const SiteScore& s : scores) {
    out += fmt::format("{}\t{}\t{}\t{}\n", s.site_id, format_double(s.t_stat), format_double(s.df),
                       format_double(s.p_value));
  }
  return out;
}

int cmd_gen_synth(const CommonOptions& opts, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  if (!config.data.synthetic) throw ValidationError("gen-synth needs a synthetic data source");
  const SyntheticData data = generate_synthetic(config.synthetic_config());
  const fs::path dir = config.output_dir;

  write_site_gene_map(dir / "site_gene.tsv", site_gene_rows(data.ontology));
  write_gmt(dir / "pathways.gmt", gene_sets(data.ontology));
  nlohmann::json tasks = nlohmann::json::array();
  for (const TaskDataset& d : data.tasks) {
    write_beta_matrix(dir / (d.task_id + ".betas.tsv"), BetaTable{d.site_ids, d.sample_ids, d.betas});
    write_labels(dir / (d.task_id + ".labels.tsv"), LabelTable{d.sample_ids, d.labels});
    tasks.push_back({{"task_id", d.task_id}, {"betas", d.task_id + ".betas.tsv"}, {"labels", d.task_id + ".labels.tsv"}});
  }

  nlohmann::json truth;
  for (std::size_t t = 0; t < data.tasks.size(); ++t) {
    std::vector<std::string> causal;
    for (std::size_t p : data.truth.causal_pathways[t]) causal.push_back(data.ontology.pathway_ids()[p]);
    truth["tasks"].push_back({{"task_id", data.tasks[t].task_id},
                              {"causal_pathways", causal},
                              {"planted_weights", data.truth.planted_weights[t]},
                              {"intercept", data.truth.intercepts[t]}});
  }
  truth["heldout_site_gene"] = nlohmann::json::array();
  for (const Cell& c : data.truth.heldout_site_gene) {
    truth["heldout_site_gene"].push_back({data.ontology.site_ids()[c.row], data.ontology.gene_ids()[c.col]});
  }
  write_text_file(dir / "truth.json", dump_json(truth));

  // A file-based config that reproduces this data set.
  nlohmann::json file_config = to_json(config);
  file_config.erase("output_dir");
  file_config["data"] = {{"site_gene_map", "site_gene.tsv"}, {"gmt", "pathways.gmt"}, {"tasks", tasks}};
  write_text_file(dir / "config.json", dump_json(file_config));
  out << fmt::format("wrote {} tasks, {} sites to {}\n", data.tasks.size(), data.ontology.site_ids().size(),
                     dir.string());
  return kExitOk;
}

int cmd_select_sites(const CommonOptions& opts, std::optional<std::size_t> num_selected, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  config.selection.enabled = true;
  if (num_selected) config.selection.num_selected = num_selected;
  const Experiment exp = prepare_experiment(config);
  std::string listing;
  for (const std::string& s : exp.sites) listing += s + "\n";
  write_text_file(config.output_dir / "selected_sites.txt", listing);
  for (std::size_t t = 0; t < exp.scores.size(); ++t) {
    write_text_file(config.output_dir / fmt::format("scores_{}.tsv", exp.datasets[t].task_id), scores_tsv(exp.scores[t]));
  }
  out << fmt::format("selected {} sites\n", exp.sites.size());
  return kExitOk;
}

int cmd_build_masks(const CommonOptions& opts, std::optional<double> fraction, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  if (fraction) {
    if (!(*fraction >= 0.0 && *fraction <= 1.0)) throw ValidationError("--holdout must lie in [0,1]");
    config.masks.holdout_fraction = *fraction;
    // An explicit fraction replaces any planted synthetic hold-out.
    if (config.data.synthetic) config.data.synthetic->heldout_fraction = 0.0;
  }
  const Experiment exp = prepare_experiment(config);
  const fs::path dir = config.output_dir;
  const auto& genes = exp.ontology.gene_ids();
  write_text_file(dir / "site_gene_mask.tsv", matrix_tsv(exp.masks.site_gene, "site_id", exp.sites, genes));
  write_text_file(dir / "gene_pathway_mask.tsv",
                  matrix_tsv(exp.masks.gene_pathway, "gene_id", genes, exp.ontology.pathway_ids()));
  std::string held = "tier\trow_id\tcol_id\n";
  for (const MaskPosition& m : exp.masks.heldout) {
    const bool sg = m.tier == Tier::site_gene;
    held += fmt::format("{}\t{}\t{}\n", sg ? "site_gene" : "gene_pathway", sg ? exp.sites[m.cell.row] : genes[m.cell.row],
                        sg ? genes[m.cell.col] : exp.ontology.pathway_ids()[m.cell.col]);
  }
  write_text_file(dir / "heldout.tsv", held);
  const nlohmann::json digests = {{"site_gene", mask_digest(exp.masks.site_gene)},
                                  {"gene_pathway", mask_digest(exp.masks.gene_pathway)},
                                  {"heldout", exp.masks.heldout.size()},
                                  {"config_digest", config_digest(config)}};
  write_text_file(dir / "masks.json", dump_json(digests));
  out << fmt::format("masks {} and {}, {} held out\n", exp.masks.site_gene.shape_string(),
                     exp.masks.gene_pathway.shape_string(), exp.masks.heldout.size());
  return kExitOk;
}

int cmd_train(const CommonOptions& opts, std::size_t repeats, std::ostream& out) {
  if (repeats == 0) throw ValidationError("--repeats must be at least 1");
  const RunConfig config = resolve_config(opts);
  const Experiment exp = prepare_experiment(config);
  const std::string digest = config_digest(config);
  write_text_file(config.output_dir / "config.json", dump_json(to_json(config)));

  std::vector<RunAccuracy> test_runs, val_runs;
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::uint64_t seed = config.seed + r;
    const fs::path dir = repeats == 1 ? config.output_dir : config.output_dir / fmt::format("run_{}", seed);
    fs::create_directories(dir);
    TrainPlan plan = config.train;
    plan.seed = seed;
    MultiTaskVae model = build_model(exp, config, seed);

    std::string jsonl;
    auto sink = [&](const EpochReport& rep) {
      jsonl += rep.to_json().dump() + "\n";
      out << fmt::format("seed {} stage {} epoch {} loss {:.6f} val {:.4f} lr {:g}\n", seed, rep.stage, rep.epoch,
                         rep.mean_train_loss, rep.mean_val_accuracy, rep.lr);
    };
    train_three_stage(model, exp.datasets, plan, sink);
    write_text_file(dir / "epochs.jsonl", jsonl);
    save_checkpoint(dir / "checkpoint.json", model, digest);
    test_runs.push_back({seed, evaluate(model, exp.datasets, SplitTag::test, config.threshold)});
    val_runs.push_back({seed, evaluate(model, exp.datasets, SplitTag::val, config.threshold)});
  }
  const std::vector<std::string> ids = exp.task_ids();
  const nlohmann::json metrics = metrics_json(test_runs, ids, SplitTag::test, digest);
  write_text_file(config.output_dir / "metrics.json", dump_json(metrics));
  write_text_file(config.output_dir / "metrics_val.json", dump_json(metrics_json(val_runs, ids, SplitTag::val, digest)));
  out << fmt::format("test mean accuracy {:.4f} (std {:.4f})\n", metrics["mean_accuracy"].get<double>(),
                     metrics["std"].get<double>());
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& checkpoint, const std::string& split_text,
                 std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const SplitTag tag = parse_split(split_text);
  const Experiment exp = prepare_experiment(config);
  const MultiTaskVae model = load_checkpoint(checkpoint, exp.masks);
  const std::vector<RunAccuracy> runs{{config.seed, evaluate(model, exp.datasets, tag, config.threshold)}};
  const nlohmann::json metrics = metrics_json(runs, exp.task_ids(), tag, config_digest(config));
  write_text_file(config.output_dir / "metrics.json", dump_json(metrics));
  out << fmt::format("{} mean accuracy {:.4f}\n", split_name(tag), metrics["mean_accuracy"].get<double>());
  return kExitOk;
}

int cmd_embed(const CommonOptions& opts, const std::string& checkpoint, const std::string& split_text,
              std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  std::optional<SplitTag> tag;
  if (split_text != "all") tag = parse_split(split_text);
  const Experiment exp = prepare_experiment(config);
  const MultiTaskVae model = load_checkpoint(checkpoint, exp.masks);
  write_text_file(config.output_dir / "embeddings.tsv", export_embeddings(model, exp.datasets, tag));
  out << "wrote embeddings.tsv\n";
  return kExitOk;
}

int cmd_export_weights(const CommonOptions& opts, const std::string& checkpoint, std::size_t bins,
                       std::optional<std::size_t> top_k, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const Experiment exp = prepare_experiment(config);
  const MultiTaskVae model = load_checkpoint(checkpoint, exp.masks);
  const fs::path dir = config.output_dir;
  const std::vector<Cell> held_sg = heldout_cells(exp.masks, Tier::site_gene);
  const std::vector<Cell> held_gp = heldout_cells(exp.masks, Tier::gene_pathway);
  write_text_file(dir / "hist_site_gene.csv",
                  weight_distributions("site_gene", model.enc_site_gene(), exp.original_masks.site_gene, held_sg, bins)
                      .to_csv());
  write_text_file(dir / "hist_gene_pathway.csv",
                  weight_distributions("gene_pathway", model.enc_mu(), exp.original_masks.gene_pathway, held_gp, bins)
                      .to_csv());
  // The gene→site decoder is ranked in the encoder's orientation.
  const std::size_t k = top_k.value_or(held_sg.size());
  const Recovery enc = recover_heldout(model.enc_site_gene(), exp.original_masks.site_gene, held_sg, k);
  const Recovery dec =
      recover_heldout(transposed(model.dec_gene_site()), exp.original_masks.site_gene, held_sg, k);
  write_text_file(dir / "recovery_site_gene.tsv", recovery_tsv(enc, exp.sites, exp.ontology.gene_ids()));
  write_text_file(dir / "recovery_gene_site.tsv", recovery_tsv(dec, exp.sites, exp.ontology.gene_ids()));
  auto summary = [&](const Recovery& r) {
    return nlohmann::json{{"heldout", held_sg.size()}, {"pool", r.ranking.size()}, {"top_k", r.top_k},
                          {"hits", r.hits},          {"recovery", r.recovery},   {"chance", r.chance}};
  };
  write_text_file(dir / "recovery.json", dump_json({{"enc_site_gene", summary(enc)}, {"dec_gene_site", summary(dec)}}));
  out << fmt::format("recovery@{} encoder {:.4f}, decoder {:.4f} (chance {:.4f})\n", enc.top_k, enc.recovery,
                     dec.recovery, enc.chance);
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  const GradCheckReport report = gradcheck_tiny_model(seed);
  out << fmt::format("max relative error {:.3e} over {} entries (worst: {}[{}] analytic {:.6e} numeric {:.6e})\n", report.max_relative_error,
                     report.entries_checked, report.worst_parameter, report.worst_index, report.worst_analytic, report.worst_numeric);
  return report.max_relative_error < 1e-5 ? kExitOk : kExitRuntime;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ontology-masked multi-task VAE for methylation phenotype prediction", "omvae"};
  app.require_subcommand(1);

  CommonOptions common;
  std::optional<std::size_t> num_selected, top_k;
  std::optional<double> holdout_fraction;
  std::size_t repeats = 1, bins = kDefaultHistogramBins;
  std::string checkpoint, eval_split, embed_split;
  std::uint64_t grad_seed = 1;

  CLI::App* gen = app.add_subcommand("gen-synth", "Write a synthetic ontology, task data and ground truth");
  add_common(*gen, common);

  CLI::App* sel = app.add_subcommand("select-sites", "Score sites per task with Welch t-tests and write the union");
  add_common(*sel, common);
  sel->add_option("--num-selected", num_selected, "Keep this many smallest-p sites per task instead of p <= 0.05");

  CLI::App* masks = app.add_subcommand("build-masks", "Compile the ontology into site-gene and gene-pathway masks");
  add_common(*masks, common);
  masks->add_option("--holdout", holdout_fraction, "Fraction of site-gene edges to hold out");

  CLI::App* train = app.add_subcommand("train", "Three-stage training; writes checkpoint, epoch reports and metrics");
  add_common(*train, common);
  train->add_option("--repeats", repeats, "Train with seeds seed, seed+1, ... and report mean and std")
      ->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("evaluate", "Accuracy of a checkpoint on one split");
  add_common(*eval, common);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--split", eval_split, "train, val or test")->default_val("test");

  CLI::App* embed = app.add_subcommand("embed", "Export posterior-mean embeddings as TSV");
  add_common(*embed, common);
  embed->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  embed->add_option("--split", embed_split, "train, val, test or all")->default_val("all");

  CLI::App* weights = app.add_subcommand("export-weights", "Weight histograms and held-out edge recovery ranking");
  add_common(*weights, common);
  weights->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  weights->add_option("--bins", bins, "Histogram bins")->default_val(kDefaultHistogramBins)->check(CLI::PositiveNumber);
  weights->add_option("--top-k", top_k, "Ranking cut-off (default: number of held-out edges)");

  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference check of the composite loss on a tiny model");
  grad->add_option("--seed", grad_seed, "Seed for the model, masks and batch")->default_val(1);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(common, out);
    if (sel->parsed()) return cmd_select_sites(common, num_selected, out);
    if (masks->parsed()) return cmd_build_masks(common, holdout_fraction, out);
    if (train->parsed()) return cmd_train(common, repeats, out);
    if (eval->parsed()) return cmd_evaluate(common, checkpoint, eval_split, out);
    if (embed->parsed()) return cmd_embed(common, checkpoint, embed_split, out);
    if (weights->parsed()) return cmd_export_weights(common, checkpoint, bins, top_k, out);
    if (grad->parsed()) return cmd_gradcheck(grad_seed, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace omvae
