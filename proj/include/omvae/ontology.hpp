// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "omvae/matrix.hpp"
#include "omvae/rng.hpp"

namespace omvae {

// Directed edge between two tiers; strength in [0, 1] scales the mask entry.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double strength = 1.0;
};

// Two-tier site → gene → pathway graph. Validated on construction: ids are
// unique within a tier, edge endpoints are in range, no (from, to) pair
// repeats, and strengths lie in [0, 1].
class Ontology {
 public:
  Ontology() = default;
  Ontology(std::vector<std::string> site_ids, std::vector<std::string> gene_ids,
           std::vector<std::string> pathway_ids, std::vector<Edge> site_gene_edges,
           std::vector<Edge> gene_pathway_edges);

  const std::vector<std::string>& site_ids() const { return site_ids_; }
  const std::vector<std::string>& gene_ids() const { return gene_ids_; }
  const std::vector<std::string>& pathway_ids() const { return pathway_ids_; }
  const std::vector<Edge>& site_gene_edges() const { return site_gene_edges_; }
  const std::vector<Edge>& gene_pathway_edges() const { return gene_pathway_edges_; }

  std::optional<std::size_t> site_index(std::string_view id) const;
  std::optional<std::size_t> gene_index(std::string_view id) const;

 private:
  std::vector<std::string> site_ids_;
  std::vector<std::string> gene_ids_;
  std::vector<std::string> pathway_ids_;
  std::vector<Edge> site_gene_edges_;
  std::vector<Edge> gene_pathway_edges_;
  std::unordered_map<std::string, std::size_t> site_lookup_;
  std::unordered_map<std::string, std::size_t> gene_lookup_;
};

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class Tier { site_gene, gene_pathway };

struct MaskPosition {
  Tier tier = Tier::site_gene;
  Cell cell;
  bool operator==(const MaskPosition&) const = default;
};

// Site→gene (n×g) and gene→pathway (g×p) masks for one site selection.
struct MaskPair {
  Matrix site_gene;
  Matrix gene_pathway;
  std::vector<MaskPosition> heldout;
};

// Rows of site_gene follow selected_sites. Genes and pathways left without
// edges are kept as zero columns/rows so layer widths do not depend on the
// selection.
MaskPair build_masks(const Ontology& ontology, std::span<const std::string> selected_sites);

struct HoldoutOptions {
  // Value written at held-out positions. 1.0 leaves the hidden connection
  // trainable rather than forbidden.
  double substitute = 1.0;
  // Also write `substitute` at the originally-zero positions of every row
  // that holds a held-out edge, so within those rows the hidden edge and the
  // non-edges are indistinguishable to the model. Needed for recovery
  // experiments, where hidden edges must be rediscovered among candidates.
  bool open_candidates = false;
};

struct HoldoutResult {
  Matrix masked;
  std::vector<Cell> heldout;  // row-major order
};

// Hides round(fraction × nnz) nonzero entries chosen uniformly at random.
HoldoutResult holdout(const Matrix& mask, double fraction, Rng& rng, const HoldoutOptions& options = {});

// Holds out the given positions (sorted, deduplicated) instead of a random sample.
HoldoutResult apply_holdout(const Matrix& mask, std::vector<Cell> cells, const HoldoutOptions& options = {});

struct PositionClasses {
  std::vector<Cell> ones;      // nonzero in the original mask and not held out
  std::vector<Cell> masked;    // held out
  std::vector<Cell> non_ones;  // zero in the original mask
};

PositionClasses classify_positions(const Matrix& mask_original, std::span<const Cell> heldout);

// Held-out cells of one tier, in recorded order.
std::vector<Cell> heldout_cells(const MaskPair& masks, Tier tier);

}  // namespace omvae
