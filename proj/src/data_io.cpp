// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/data_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <zlib.h>

#include "omvae/error.hpp"

namespace omvae {
namespace {

namespace fs = std::filesystem;

bool has_gz_suffix(const fs::path& path) { return path.extension() == ".gz"; }

// Line reader over plain or gzip-compressed text.
class LineReader {
 public:
  explicit LineReader(const fs::path& path) : path_(path) {
    file_ = gzopen(path.c_str(), "rb");
    if (file_ == nullptr) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  }
  ~LineReader() {
    if (file_ != nullptr) gzclose(file_);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line) {
    line.clear();
    char buffer[1 << 16];
    bool any = false;
    while (gzgets(file_, buffer, sizeof buffer) != nullptr) {
      any = true;
      line.append(buffer);
      if (!line.empty() && line.back() == '\n') break;
    }
    if (!any) return false;
    ++line_number_;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    return true;
  }

  std::size_t line_number() const { return line_number_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ValidationError(fmt::format("{}:{}: {}", path_.string(), line_number_, message));
  }

 private:
  fs::path path_;
  gzFile file_ = nullptr;
  std::size_t line_number_ = 0;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<double> parse_double(std::string_view text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

bool is_blank(std::string_view line) { return line.find_first_not_of(" \t") == std::string_view::npos; }

}  // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

void write_text_file(const fs::path& path, const std::string& contents) {
  if (has_gz_suffix(path)) {
    gzFile file = gzopen(path.c_str(), "wb9");
    if (file == nullptr) throw Error(fmt::format("cannot write '{}'", path.string()));
    const int written = contents.empty() ? 0 : gzwrite(file, contents.data(), static_cast<unsigned>(contents.size()));
    gzclose(file);
    if (written != static_cast<int>(contents.size())) throw Error(fmt::format("failed writing '{}'", path.string()));
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << contents;
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

BetaTable load_beta_matrix(const fs::path& path, const LoadOptions& options) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("empty beta matrix, expected a header");
  const auto header = split_tabs(line);
  if (header.size() < 2 || header[0] != "sample_id") {
    reader.fail("header must be 'sample_id<TAB>site...' with at least one site");
  }
  BetaTable table;
  std::unordered_set<std::string> seen_sites;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (!seen_sites.emplace(header[j]).second) reader.fail(fmt::format("duplicate site column '{}'", header[j]));
    table.site_ids.emplace_back(header[j]);
  }
  const std::size_t sites = table.site_ids.size();

  std::vector<double> values;
  std::vector<std::size_t> missing;  // flat indices of NA cells
  std::vector<std::size_t> missing_line;
  std::unordered_set<std::string> seen_samples;
  while (reader.next(line)) {
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != sites + 1) {
      reader.fail(fmt::format("row has {} fields, header has {}", fields.size(), sites + 1));
    }
    if (!seen_samples.emplace(fields[0]).second) reader.fail(fmt::format("duplicate sample '{}'", fields[0]));
    table.sample_ids.emplace_back(fields[0]);
    for (std::size_t j = 1; j <= sites; ++j) {
      if (fields[j] == "NA") {
        if (!options.impute_mean) reader.fail(fmt::format("missing value (NA) for site '{}'", table.site_ids[j - 1]));
        missing.push_back(values.size());
        missing_line.push_back(reader.line_number());
        values.push_back(0.0);
        continue;
      }
      const auto v = parse_double(fields[j]);
      if (!v) reader.fail(fmt::format("'{}' is not a number", fields[j]));
      if (!(*v >= 0.0 && *v <= 1.0)) reader.fail(fmt::format("beta value {} outside [0,1]", fields[j]));
      values.push_back(*v);
    }
  }
  const std::size_t samples = table.sample_ids.size();
  if (!missing.empty()) {
    std::vector<double> sum(sites, 0.0);
    std::vector<std::size_t> present(sites, samples);
    std::vector<bool> is_missing(values.size(), false);
    for (std::size_t k : missing) {
      is_missing[k] = true;
      --present[k % sites];
    }
    for (std::size_t k = 0; k < values.size(); ++k)
      if (!is_missing[k]) sum[k % sites] += values[k];
    for (std::size_t idx = 0; idx < missing.size(); ++idx) {
      const std::size_t k = missing[idx];
      const std::size_t col = k % sites;
      if (present[col] == 0) {
        throw ValidationError(fmt::format("{}:{}: column '{}' has no non-missing values to impute from",
                                          path.string(), missing_line[idx], table.site_ids[col]));
      }
      values[k] = sum[col] / static_cast<double>(present[col]);
    }
  }
  table.values = Matrix(samples, sites, std::move(values));
  return table;
}

LabelTable load_labels(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("empty labels file, expected a header");
  const auto header = split_tabs(line);
  if (header.size() != 2 || header[0] != "sample_id" || header[1] != "label") {
    reader.fail("header must be 'sample_id<TAB>label'");
  }
  LabelTable table;
  std::unordered_set<std::string> seen;
  while (reader.next(line)) {
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) reader.fail(fmt::format("expected 2 fields, got {}", fields.size()));
    if (!seen.emplace(fields[0]).second) reader.fail(fmt::format("duplicate sample '{}'", fields[0]));
    if (fields[1] != "0" && fields[1] != "1") reader.fail(fmt::format("label '{}' is not 0 or 1", fields[1]));
    table.sample_ids.emplace_back(fields[0]);
    table.labels.push_back(fields[1] == "1" ? 1 : 0);
  }
  return table;
}

std::vector<SiteGeneRow> load_site_gene_map(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("empty site-gene map, expected a header");
  const auto header = split_tabs(line);
  if (header.size() < 2 || header.size() > 3 || header[0] != "site_id" || header[1] != "gene_id" ||
      (header.size() == 3 && header[2] != "strength")) {
    reader.fail("header must be 'site_id<TAB>gene_id[<TAB>strength]'");
  }
  std::vector<SiteGeneRow> rows;
  std::set<std::pair<std::string, std::string>> seen;
  while (reader.next(line)) {
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > header.size()) {
      reader.fail(fmt::format("expected {} fields, got {}", header.size(), fields.size()));
    }
    SiteGeneRow row{std::string(fields[0]), std::string(fields[1]), 1.0};
    if (fields.size() == 3) {
      const auto v = parse_double(fields[2]);
      if (!v) reader.fail(fmt::format("strength '{}' is not a number", fields[2]));
      if (!(*v >= 0.0 && *v <= 1.0)) reader.fail(fmt::format("strength {} outside [0,1]", fields[2]));
      row.strength = *v;
    }
    if (!seen.emplace(row.site, row.gene).second) {
      reader.fail(fmt::format("duplicate site-gene edge ({}, {})", row.site, row.gene));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<GeneSet> load_gmt(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  std::vector<GeneSet> sets;
  std::unordered_set<std::string> names;
  while (reader.next(line)) {
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2) reader.fail("GMT line needs a name and a description");
    GeneSet set{std::string(fields[0]), std::string(fields[1]), {}};
    if (!names.insert(set.name).second) reader.fail(fmt::format("duplicate pathway '{}'", set.name));
    std::unordered_set<std::string_view> members;
    for (std::size_t k = 2; k < fields.size(); ++k) {
      if (fields[k].empty()) continue;
      if (!members.insert(fields[k]).second) {
        reader.fail(fmt::format("gene '{}' listed twice in pathway '{}'", fields[k], set.name));
      }
      set.genes.emplace_back(fields[k]);
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

void write_beta_matrix(const fs::path& path, const BetaTable& table) {
  std::string out = "sample_id";
  for (const auto& s : table.site_ids) (out += '\t') += s;
  out += '\n';
  for (std::size_t i = 0; i < table.sample_ids.size(); ++i) {
    out += table.sample_ids[i];
    for (double v : table.values.row(i)) (out += '\t') += format_double(v);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_labels(const fs::path& path, const LabelTable& table) {
  std::string out = "sample_id\tlabel\n";
  for (std::size_t i = 0; i < table.sample_ids.size(); ++i)
    out += fmt::format("{}\t{}\n", table.sample_ids[i], table.labels[i]);
  write_text_file(path, out);
}

void write_site_gene_map(const fs::path& path, const std::vector<SiteGeneRow>& rows) {
  std::string out = "site_id\tgene_id\tstrength\n";
  for (const auto& r : rows) out += fmt::format("{}\t{}\t{}\n", r.site, r.gene, format_double(r.strength));
  write_text_file(path, out);
}

void write_gmt(const fs::path& path, const std::vector<GeneSet>& sets) {
  std::string out;
  for (const auto& set : sets) {
    out += set.name;
    (out += '\t') += set.description;
    for (const auto& g : set.genes) (out += '\t') += g;
    out += '\n';
  }
  write_text_file(path, out);
}

OntologyBuild assemble_ontology(const std::vector<SiteGeneRow>& site_gene, const std::vector<GeneSet>& sets) {
  std::vector<std::string> sites, genes, pathways;
  std::unordered_map<std::string, std::size_t> site_index, gene_index;
  std::vector<Edge> sg_edges, gp_edges;
  for (const auto& row : site_gene) {
    auto [s, new_site] = site_index.try_emplace(row.site, sites.size());
    if (new_site) sites.push_back(row.site);
    auto [g, new_gene] = gene_index.try_emplace(row.gene, genes.size());
    if (new_gene) genes.push_back(row.gene);
    sg_edges.push_back({s->second, g->second, row.strength});
  }
  std::size_t dropped = 0;
  for (std::size_t p = 0; p < sets.size(); ++p) {
    pathways.push_back(sets[p].name);
    for (const auto& gene : sets[p].genes) {
      auto it = gene_index.find(gene);
      if (it == gene_index.end()) {
        ++dropped;
        continue;
      }
      gp_edges.push_back({it->second, p, 1.0});
    }
  }
  return {Ontology(std::move(sites), std::move(genes), std::move(pathways), std::move(sg_edges), std::move(gp_edges)),
          dropped};
}

std::vector<SiteGeneRow> site_gene_rows(const Ontology& ontology) {
  std::vector<SiteGeneRow> rows;
  for (const Edge& e : ontology.site_gene_edges())
    rows.push_back({ontology.site_ids()[e.from], ontology.gene_ids()[e.to], e.strength});
  return rows;
}

std::vector<GeneSet> gene_sets(const Ontology& ontology) {
  std::vector<GeneSet> sets;
  for (const auto& name : ontology.pathway_ids()) sets.push_back({name, "na", {}});
  for (const Edge& e : ontology.gene_pathway_edges()) sets[e.to].genes.push_back(ontology.gene_ids()[e.from]);
  return sets;
}

TaskDataset assemble_dataset(std::string task_id, const BetaTable& betas, const LabelTable& labels) {
  std::unordered_map<std::string_view, int> label_of;
  for (std::size_t i = 0; i < labels.sample_ids.size(); ++i) label_of.emplace(labels.sample_ids[i], labels.labels[i]);
  TaskDataset dataset;
  dataset.task_id = std::move(task_id);
  dataset.sample_ids = betas.sample_ids;
  dataset.site_ids = betas.site_ids;
  dataset.betas = betas.values;
  for (const auto& id : betas.sample_ids) {
    auto it = label_of.find(id);
    if (it == label_of.end()) {
      throw ValidationError(fmt::format("dataset '{}': sample '{}' has no label", dataset.task_id, id));
    }
    dataset.labels.push_back(it->second);
  }
  dataset.split.assign(dataset.sample_ids.size(), SplitTag::train);
  dataset.validate();
  return dataset;
}

}  // namespace omvae
