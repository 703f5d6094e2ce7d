// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "omvae/error.hpp"

namespace omvae {
namespace {

std::unordered_map<std::string, std::size_t> index_ids(const std::vector<std::string>& ids,
                                                        std::string_view tier) {
  std::unordered_map<std::string, std::size_t> lookup;
  lookup.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!lookup.emplace(ids[i], i).second) {
      throw ValidationError(fmt::format("duplicate {} id '{}'", tier, ids[i]));
    }
  }
  return lookup;
}

void check_edges(const std::vector<Edge>& edges, std::size_t from_count, std::size_t to_count,
                 std::string_view name) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Edge& e : edges) {
    if (e.from >= from_count || e.to >= to_count) {
      throw ValidationError(fmt::format("{} edge ({}, {}) out of range [{}x{}]", name, e.from, e.to,
                                        from_count, to_count));
    }
    if (!(e.strength >= 0.0 && e.strength <= 1.0)) {
      throw ValidationError(
          fmt::format("{} edge ({}, {}) strength {} outside [0,1]", name, e.from, e.to, e.strength));
    }
    if (!seen.emplace(e.from, e.to).second) {
      throw ValidationError(fmt::format("duplicate {} edge ({}, {})", name, e.from, e.to));
    }
  }
}

}  // namespace

Ontology::Ontology(std::vector<std::string> site_ids, std::vector<std::string> gene_ids,
                   std::vector<std::string> pathway_ids, std::vector<Edge> site_gene_edges,
                   std::vector<Edge> gene_pathway_edges)
    : site_ids_(std::move(site_ids)),
      gene_ids_(std::move(gene_ids)),
      pathway_ids_(std::move(pathway_ids)),
      site_gene_edges_(std::move(site_gene_edges)),
      gene_pathway_edges_(std::move(gene_pathway_edges)) {
  site_lookup_ = index_ids(site_ids_, "site");
  gene_lookup_ = index_ids(gene_ids_, "gene");
  index_ids(pathway_ids_, "pathway");
  check_edges(site_gene_edges_, site_ids_.size(), gene_ids_.size(), "site-gene");
  check_edges(gene_pathway_edges_, gene_ids_.size(), pathway_ids_.size(), "gene-pathway");
}

std::optional<std::size_t> Ontology::site_index(std::string_view id) const {
  auto it = site_lookup_.find(std::string(id));
  if (it == site_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Ontology::gene_index(std::string_view id) const {
  auto it = gene_lookup_.find(std::string(id));
  if (it == gene_lookup_.end()) return std::nullopt;
  return it->second;
}

MaskPair build_masks(const Ontology& ontology, std::span<const std::string> selected_sites) {
  const std::size_t genes = ontology.gene_ids().size();
  const std::size_t pathways = ontology.pathway_ids().size();

  // site index -> row in the selected order (or npos)
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> row_of_site(ontology.site_ids().size(), npos);
  std::vector<std::string> unknown;
  for (std::size_t r = 0; r < selected_sites.size(); ++r) {
    auto idx = ontology.site_index(selected_sites[r]);
    if (!idx) {
      unknown.push_back(selected_sites[r]);
      continue;
    }
    if (row_of_site[*idx] != npos) {
      throw ValidationError(fmt::format("site '{}' selected twice", selected_sites[r]));
    }
    row_of_site[*idx] = r;
  }
  if (!unknown.empty()) {
    throw ValidationError(
        fmt::format("selected sites missing from ontology: {}", fmt::join(unknown, ", ")));
  }

  MaskPair masks;
  masks.site_gene = Matrix(selected_sites.size(), genes);
  masks.gene_pathway = Matrix(genes, pathways);
  for (const Edge& e : ontology.site_gene_edges()) {
    if (row_of_site[e.from] != npos) masks.site_gene(row_of_site[e.from], e.to) = e.strength;
  }
  for (const Edge& e : ontology.gene_pathway_edges()) masks.gene_pathway(e.from, e.to) = e.strength;
  return masks;
}

HoldoutResult holdout(const Matrix& mask, double fraction, Rng& rng, const HoldoutOptions& options) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw DomainError(fmt::format("holdout fraction {} outside [0,1]", fraction));
  }
  std::vector<Cell> nonzero;
  for (std::size_t r = 0; r < mask.rows(); ++r)
    for (std::size_t c = 0; c < mask.cols(); ++c)
      if (mask(r, c) != 0.0) nonzero.push_back({r, c});

  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(nonzero.size())));
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(nonzero.size() - i));
    std::swap(nonzero[i], nonzero[j]);
  }
  return apply_holdout(mask, {nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(count)}, options);
}

HoldoutResult apply_holdout(const Matrix& mask, std::vector<Cell> cells, const HoldoutOptions& options) {
  for (const Cell& cell : cells) {
    if (cell.row >= mask.rows() || cell.col >= mask.cols()) {
      throw ShapeError(fmt::format("held-out position ({}, {}) outside mask {}", cell.row, cell.col, mask.shape_string()));
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  HoldoutResult result{mask, std::move(cells)};
  if (options.open_candidates) {
    for (const Cell& cell : result.heldout)
      for (double& v : result.masked.row(cell.row))
        if (v == 0.0) v = options.substitute;
  }
  for (const Cell& cell : result.heldout) result.masked(cell.row, cell.col) = options.substitute;
  return result;
}

PositionClasses classify_positions(const Matrix& mask_original, std::span<const Cell> heldout) {
  std::set<Cell> hidden;
  for (const Cell& cell : heldout) {
    if (cell.row >= mask_original.rows() || cell.col >= mask_original.cols()) {
      throw ShapeError(fmt::format("held-out position ({}, {}) outside mask {}", cell.row, cell.col,
                                   mask_original.shape_string()));
    }
    hidden.insert(cell);
  }
  PositionClasses classes;
  for (std::size_t r = 0; r < mask_original.rows(); ++r) {
    for (std::size_t c = 0; c < mask_original.cols(); ++c) {
      const Cell cell{r, c};
      if (hidden.contains(cell)) {
        classes.masked.push_back(cell);
      } else if (mask_original(r, c) != 0.0) {
        classes.ones.push_back(cell);
      } else {
        classes.non_ones.push_back(cell);
      }
    }
  }
  return classes;
}

std::vector<Cell> heldout_cells(const MaskPair& masks, Tier tier) {
  std::vector<Cell> cells;
  for (const MaskPosition& p : masks.heldout)
    if (p.tier == tier) cells.push_back(p.cell);
  return cells;
}

}  // namespace omvae
