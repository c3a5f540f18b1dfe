//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_MOTIF_HPP_
#define CPIFORMER_MOTIF_HPP_

#include <set>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpiformer/atom_graph.hpp"

namespace cpiformer {

/// Quotient of an atom graph under the bond-breaking rules. Motifs partition
/// the atom indices; each motif is represented by the centroid of its member
/// coordinates.
struct MotifGraph {
  /// Member atom indices, each list ascending; motifs ordered by their
  /// smallest member so the decomposition is reproducible.
  std::vector<std::vector<int>> motifs;
  /// Inter-motif edges (a < b), deduplicated, ascending. Each edge is the
  /// image of at least one cut bond.
  std::vector<std::pair<int, int>> edges;
  /// Arithmetic mean of member coordinates, per motif.
  std::vector<Vec3> centroids;
  /// Atom index -> motif index. Total over the atom graph.
  std::vector<int> parent;
  /// Set when some residue had no backbone-flagged atom and fell back to the
  /// compound rule.
  bool backbone_fallback = false;

  int size() const { return static_cast<int>(motifs.size()); }

  /// Throws ParseError if the motif graph is not a valid decomposition of g:
  /// non-partition, centroid off by more than 1e-9, edge without a crossing
  /// bond, or a motif whose induced subgraph is disconnected.
  void validate(const AtomGraph &g) const;
};

/// JSON shape: {motifs: [[atom...]...], edges: [[a,b]...], centroids: [[x,y,z]...]}.
void to_json(nlohmann::json &j, const MotifGraph &mg);

/// Bond indices lying on at least one simple cycle, computed as the
/// complement of the bridge set.
std::set<int> find_ring_bonds(const AtomGraph &g);

/// Compound rule: cut every single-order bond that is not a ring bond; keep
/// double, triple, aromatic, and ring bonds. Motifs are the connected
/// components that remain.
MotifGraph decompose_compound(const AtomGraph &g);

/// Protein rule: per residue, the backbone atoms (N, CA, C, O) stay together
/// as one motif and peptide bonds become motif edges; sidechain atoms follow
/// the compound rule, which always severs CA-CB. A residue with no backbone
/// atoms falls back to the compound rule and raises backbone_fallback.
MotifGraph decompose_protein(const AtomGraph &g);

/// Per-motif vector = arithmetic mean of member atoms' vectors.
std::vector<std::vector<double>> motif_init_embedding(
    const MotifGraph &mg, const std::vector<std::vector<double>> &atom_embeddings);

}  // namespace cpiformer

#endif  // CPIFORMER_MOTIF_HPP_
