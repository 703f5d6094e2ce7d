// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "omvae/data_io.hpp"
#include "omvae/error.hpp"

namespace omvae {

std::string export_embeddings(const MultiTaskVae& model, std::span<const TaskDataset> datasets,
                              std::optional<SplitTag> split) {
  const std::size_t p = model.dims().pathways;
  std::string out = "sample_id\ttask_id\tlabel";
  for (std::size_t j = 0; j < p; ++j) out += fmt::format("\tmu_{}", j + 1);
  out += '\n';
  for (const TaskDataset& d : datasets) {
    std::vector<std::size_t> rows;
    if (split) {
      rows = d.indices(*split);
    } else {
      rows.resize(d.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    if (rows.empty()) continue;
    const Matrix mu = encode(model, gather_rows(d.betas, rows)).mu;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out += fmt::format("{}\t{}\t{}", d.sample_ids[rows[i]], d.task_id, d.labels[rows[i]]);
      for (std::size_t j = 0; j < p; ++j) {
        out += '\t';
        out += format_double(mu(i, j));
      }
      out += '\n';
    }
  }
  return out;
}

std::string WeightHistogram::to_csv() const {
  std::string out = "bin_lo,bin_hi,ones,masked,non_ones\n";
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    out += fmt::format("{},{},{},{},{}\n", format_double(edges[b]), format_double(edges[b + 1]), ones[b], masked[b],
                       non_ones[b]);
  }
  return out;
}

WeightHistogram weight_distributions(std::string_view name, const MaskedLinear& layer,
                                     const Matrix& mask_original, std::span<const Cell> heldout, std::size_t bins) {
  const Matrix& w = layer.weight();
  if (!w.same_shape(mask_original)) {
    throw ShapeError(fmt::format("layer {} is {} but the original mask is {}", name, w.shape_string(),
                                 mask_original.shape_string()));
  }
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  const PositionClasses classes = classify_positions(mask_original, heldout);

  WeightHistogram h;
  h.layer = std::string(name);
  double lo = 0.0, hi = 0.0;
  if (w.size() > 0) {
    const auto [mn, mx] = std::minmax_element(w.data().begin(), w.data().end());
    lo = *mn;
    hi = *mx;
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + width * static_cast<double>(b));
  h.ones.assign(bins, 0);
  h.masked.assign(bins, 0);
  h.non_ones.assign(bins, 0);

  auto bin_of = [&](double v) {
    const auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
    return std::min(b, bins - 1);
  };
  for (const Cell& c : classes.ones) ++h.ones[bin_of(w(c.row, c.col))];
  for (const Cell& c : classes.masked) ++h.masked[bin_of(w(c.row, c.col))];
  for (const Cell& c : classes.non_ones) ++h.non_ones[bin_of(w(c.row, c.col))];
  return h;
}

Recovery recover_heldout(const MaskedLinear& layer, const Matrix& mask_original, std::span<const Cell> heldout,
                         std::size_t top_k) {
  const Matrix effective = layer.effective_weight();
  if (!effective.same_shape(mask_original)) {
    throw ShapeError(fmt::format("layer is {} but the original mask is {}", effective.shape_string(),
                                 mask_original.shape_string()));
  }
  const PositionClasses classes = classify_positions(mask_original, heldout);
  Recovery r;
  for (const Cell& c : classes.masked) r.ranking.push_back({c, std::fabs(effective(c.row, c.col)), true});
  for (const Cell& c : classes.non_ones)
    if (layer.mask()(c.row, c.col) != 0.0) r.ranking.push_back({c, std::fabs(effective(c.row, c.col)), false});
  std::sort(r.ranking.begin(), r.ranking.end(), [](const RankedCell& a, const RankedCell& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.cell < b.cell;
  });
  r.top_k = std::min(top_k, r.ranking.size());
  for (std::size_t i = 0; i < r.top_k; ++i)
    if (r.ranking[i].heldout) ++r.hits;
  if (!classes.masked.empty()) r.recovery = static_cast<double>(r.hits) / static_cast<double>(classes.masked.size());
  if (!r.ranking.empty()) r.chance = static_cast<double>(r.top_k) / static_cast<double>(r.ranking.size());
  return r;
}

MaskedLinear transposed(const MaskedLinear& layer) {
  return MaskedLinear(transpose(layer.weight()), Matrix(1, layer.in_features()), transpose(layer.mask()));
}

std::string recovery_tsv(const Recovery& recovery, std::span<const std::string> row_ids,
                         std::span<const std::string> col_ids) {
  std::string out = "rank\trow\tcol\tabs_weight\theldout\n";
  for (std::size_t i = 0; i < recovery.ranking.size(); ++i) {
    const RankedCell& c = recovery.ranking[i];
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", i + 1, row_ids[c.cell.row], col_ids[c.cell.col],
                       format_double(c.magnitude), c.heldout ? 1 : 0);
  }
  return out;
}

nlohmann::json metrics_json(std::span<const RunAccuracy> runs, std::span<const std::string> task_ids,
                            SplitTag split, std::string_view config_digest) {
  if (runs.empty()) throw Error("metrics need at least one run");
  const std::size_t tasks = task_ids.size();
  std::vector<double> per_task(tasks, 0.0);
  std::vector<double> means;
  nlohmann::json run_docs = nlohmann::json::array();
  for (const RunAccuracy& run : runs) {
    if (run.accuracy.per_task.size() != tasks) throw Error("run accuracy does not match the task list");
    for (std::size_t t = 0; t < tasks; ++t) per_task[t] += run.accuracy.per_task[t];
    means.push_back(run.accuracy.mean);
    run_docs.push_back({{"seed", run.seed},
                        {"per_task_accuracy", run.accuracy.per_task},
                        {"mean_accuracy", run.accuracy.mean}});
  }
  const auto n = static_cast<double>(runs.size());
  nlohmann::json per_task_doc = nlohmann::json::object();
  for (std::size_t t = 0; t < tasks; ++t) per_task_doc[task_ids[t]] = per_task[t] / n;

  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= n;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  const double std_dev = runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;

  return {{"config_digest", config_digest},
          {"split", split_name(split)},
          {"per_task_accuracy", per_task_doc},
          {"mean_accuracy", mean},
          {"std", std_dev},
          {"runs", run_docs}};
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace omvae
