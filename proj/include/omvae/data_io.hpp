// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "omvae/dataset.hpp"
#include "omvae/matrix.hpp"
#include "omvae/ontology.hpp"

namespace omvae {

// File formats. All are tab-separated UTF-8 text, one record per line;
// inputs whose name ends in ".gz" are read through zlib. Numbers are written
// with 17 significant digits so a write/load cycle is exact.
//
//   beta matrix   header  "sample_id<TAB>site_1<TAB>...<TAB>site_n"
//                 rows    "<sample><TAB>v_1 ... v_n", v in [0,1] or "NA"
//   labels        header  "sample_id<TAB>label", rows "<sample><TAB>0|1"
//   site-gene     header  "site_id<TAB>gene_id[<TAB>strength]"
//                 rows    "<site><TAB><gene>[<TAB>s]", s in [0,1], default 1
//   GMT           "<pathway><TAB><description><TAB><gene>..." (no header)

struct LoadOptions {
  // Replace "NA" cells with the mean of the non-missing values in their column.
  bool impute_mean = false;
};

struct BetaTable {
  std::vector<std::string> site_ids;
  std::vector<std::string> sample_ids;
  Matrix values;  // samples × sites
};

struct LabelTable {
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
};

struct SiteGeneRow {
  std::string site;
  std::string gene;
  double strength = 1.0;
};

struct GeneSet {
  std::string name;
  std::string description;
  std::vector<std::string> genes;
};

BetaTable load_beta_matrix(const std::filesystem::path& path, const LoadOptions& options = {});
LabelTable load_labels(const std::filesystem::path& path);
std::vector<SiteGeneRow> load_site_gene_map(const std::filesystem::path& path);
std::vector<GeneSet> load_gmt(const std::filesystem::path& path);

void write_beta_matrix(const std::filesystem::path& path, const BetaTable& table);
void write_labels(const std::filesystem::path& path, const LabelTable& table);
void write_site_gene_map(const std::filesystem::path& path, const std::vector<SiteGeneRow>& rows);
void write_gmt(const std::filesystem::path& path, const std::vector<GeneSet>& sets);

struct OntologyBuild {
  Ontology ontology;
  // GMT members that never appear in the site-gene map.
  std::size_t dropped_genes = 0;
};

// Sites and genes are ordered by first appearance in the site-gene rows,
// pathways by GMT order.
OntologyBuild assemble_ontology(const std::vector<SiteGeneRow>& site_gene,
                                const std::vector<GeneSet>& gene_sets);

// Inverse of assemble_ontology for writing an ontology back to files.
std::vector<SiteGeneRow> site_gene_rows(const Ontology& ontology);
std::vector<GeneSet> gene_sets(const Ontology& ontology);

// Pairs betas with labels by sample id; every sample needs exactly one label.
TaskDataset assemble_dataset(std::string task_id, const BetaTable& betas, const LabelTable& labels);

std::string format_double(double value);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace omvae
