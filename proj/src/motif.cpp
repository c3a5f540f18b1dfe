//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/motif.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include <nlohmann/json.hpp>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

/// Union-find over atom indices.
class DisjointSets {
public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      parent_[static_cast<std::size_t>(x)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
      x = parent_[static_cast<std::size_t>(x)];
    }
    return x;
  }

  void merge(int a, int b) { parent_[static_cast<std::size_t>(find(a))] = find(b); }

private:
  std::vector<int> parent_;
};

/// Finishes a decomposition: canonical motif order (by smallest member),
/// parent map, crossing-bond quotient edges, centroids.
MotifGraph finish(const AtomGraph &g, DisjointSets &sets) {
  const int n = g.size();
  MotifGraph mg;

  std::map<int, int> root_to_motif;
  std::vector<int> group(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int r = sets.find(i);
    group[static_cast<std::size_t>(i)] = r;
    // Atoms scan in ascending order, so motif indices already follow the
    // smallest-member rule.
    auto [it, inserted] = root_to_motif.try_emplace(r, static_cast<int>(mg.motifs.size()));
    if (inserted) mg.motifs.emplace_back();
    mg.motifs[static_cast<std::size_t>(it->second)].push_back(i);
  }

  mg.parent.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    mg.parent[static_cast<std::size_t>(i)] =
        root_to_motif.at(group[static_cast<std::size_t>(i)]);

  std::set<std::pair<int, int>> edges;
  for (const Bond &b : g.bonds) {
    int a = mg.parent[static_cast<std::size_t>(b.i)];
    int c = mg.parent[static_cast<std::size_t>(b.j)];
    if (a != c) edges.insert({std::min(a, c), std::max(a, c)});
  }
  mg.edges.assign(edges.begin(), edges.end());

  for (const auto &members : mg.motifs) {
    Vec3 sum{0, 0, 0};
    for (int i : members) sum = sum + g.coords[static_cast<std::size_t>(i)];
    mg.centroids.push_back(sum * (1.0 / static_cast<double>(members.size())));
  }
  return mg;
}

bool kept_by_compound_rule(const Bond &b, int index, const std::set<int> &rings) {
  return b.order != BondOrder::kSingle || rings.count(index) > 0;
}

}  // namespace

std::set<int> find_ring_bonds(const AtomGraph &g) {
  const int n = g.size();
  const int m = static_cast<int>(g.bonds.size());
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (int b = 0; b < m; ++b) {
    adj[static_cast<std::size_t>(g.bonds[static_cast<std::size_t>(b)].i)].push_back(
        {g.bonds[static_cast<std::size_t>(b)].j, b});
    adj[static_cast<std::size_t>(g.bonds[static_cast<std::size_t>(b)].j)].push_back(
        {g.bonds[static_cast<std::size_t>(b)].i, b});
  }

  // Iterative lowlink search; a bond is a bridge iff it is a tree edge whose
  // subtree never reaches back above it. Duplicate pairs are excluded by
  // AtomGraph::validate, so skipping the entry edge by index is sound.
  std::vector<int> disc(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  std::vector<char> bridge(static_cast<std::size_t>(m), 0);
  int timer = 0;

  struct Frame {
    int v;
    int entry_edge;
    std::size_t next;
  };
  std::vector<Frame> stack;

  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] != -1) continue;
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    stack.push_back({root, -1, 0});
    while (!stack.empty()) {
      Frame &f = stack.back();
      if (f.next < adj[static_cast<std::size_t>(f.v)].size()) {
        auto [w, e] = adj[static_cast<std::size_t>(f.v)][f.next++];
        if (e == f.entry_edge) continue;
        if (disc[static_cast<std::size_t>(w)] == -1) {
          disc[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = timer++;
          stack.push_back({w, e, 0});
        } else {
          low[static_cast<std::size_t>(f.v)] =
              std::min(low[static_cast<std::size_t>(f.v)], disc[static_cast<std::size_t>(w)]);
        }
      } else {
        Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          Frame &p = stack.back();
          low[static_cast<std::size_t>(p.v)] =
              std::min(low[static_cast<std::size_t>(p.v)], low[static_cast<std::size_t>(done.v)]);
          if (low[static_cast<std::size_t>(done.v)] > disc[static_cast<std::size_t>(p.v)])
            bridge[static_cast<std::size_t>(done.entry_edge)] = 1;
        }
      }
    }
  }

  std::set<int> rings;
  for (int b = 0; b < m; ++b)
    if (!bridge[static_cast<std::size_t>(b)]) rings.insert(b);
  return rings;
}

MotifGraph decompose_compound(const AtomGraph &g) {
  const std::set<int> rings = find_ring_bonds(g);
  DisjointSets sets(g.size());
  for (int b = 0; b < static_cast<int>(g.bonds.size()); ++b) {
    const Bond &bond = g.bonds[static_cast<std::size_t>(b)];
    if (kept_by_compound_rule(bond, b, rings)) sets.merge(bond.i, bond.j);
  }
  return finish(g, sets);
}

MotifGraph decompose_protein(const AtomGraph &g) {
  const std::set<int> rings = find_ring_bonds(g);
  const int n = g.size();

  auto is_backbone = [&](int i) {
    return g.atoms[static_cast<std::size_t>(i)].backbone.value_or(false);
  };

  DisjointSets sets(n);
  for (int b = 0; b < static_cast<int>(g.bonds.size()); ++b) {
    const Bond &bond = g.bonds[static_cast<std::size_t>(b)];
    const bool bb_i = is_backbone(bond.i);
    const bool bb_j = is_backbone(bond.j);
    if (bb_i && bb_j) {
      // Peptide bonds link different residues and stay cut so the backbone
      // becomes a chain of per-residue motifs.
      if (g.atoms[static_cast<std::size_t>(bond.i)].residue_id ==
          g.atoms[static_cast<std::size_t>(bond.j)].residue_id)
        sets.merge(bond.i, bond.j);
    } else if (!bb_i && !bb_j) {
      if (kept_by_compound_rule(bond, b, rings)) sets.merge(bond.i, bond.j);
    }
    // Mixed backbone/sidechain bonds (CA-CB, proline N-CD) are always cut.
  }

  MotifGraph mg = finish(g, sets);

  std::map<std::optional<int>, bool> residue_has_backbone;
  for (int i = 0; i < n; ++i) {
    auto &flag = residue_has_backbone[g.atoms[static_cast<std::size_t>(i)].residue_id];
    flag = flag || is_backbone(i);
  }
  for (const auto &[residue, has_backbone] : residue_has_backbone)
    if (!has_backbone) mg.backbone_fallback = true;
  return mg;
}

std::vector<std::vector<double>> motif_init_embedding(
    const MotifGraph &mg, const std::vector<std::vector<double>> &atom_embeddings) {
  if (atom_embeddings.size() != mg.parent.size())
    throw ShapeError("one embedding per atom required");
  const std::size_t dim = atom_embeddings.empty() ? 0 : atom_embeddings[0].size();
  for (const auto &e : atom_embeddings)
    if (e.size() != dim) throw ShapeError("ragged atom embeddings");

  std::vector<std::vector<double>> out;
  for (const auto &members : mg.motifs) {
    std::vector<double> mean(dim, 0.0);
    for (int i : members)
      for (std::size_t k = 0; k < dim; ++k)
        mean[k] += atom_embeddings[static_cast<std::size_t>(i)][k];
    for (double &v : mean) v /= static_cast<double>(members.size());
    out.push_back(std::move(mean));
  }
  return out;
}

void MotifGraph::validate(const AtomGraph &g) const {
  const int n = g.size();
  if (static_cast<int>(parent.size()) != n)
    throw ParseError("parent map does not cover the atom graph");
  if (centroids.size() != motifs.size())
    throw ParseError("one centroid per motif required");

  std::vector<char> covered(static_cast<std::size_t>(n), 0);
  for (int m = 0; m < size(); ++m) {
    const auto &members = motifs[static_cast<std::size_t>(m)];
    if (members.empty()) throw ParseError("empty motif");
    for (int i : members) {
      if (i < 0 || i >= n) throw ParseError("motif member out of range");
      if (covered[static_cast<std::size_t>(i)]) throw ParseError("motifs overlap");
      covered[static_cast<std::size_t>(i)] = 1;
      if (parent[static_cast<std::size_t>(i)] != m)
        throw ParseError("parent map disagrees with motif membership");
    }
  }
  for (char c : covered)
    if (!c) throw ParseError("motifs do not cover all atoms");

  for (int m = 0; m < size(); ++m) {
    const auto &members = motifs[static_cast<std::size_t>(m)];
    Vec3 sum{0, 0, 0};
    for (int i : members) sum = sum + g.coords[static_cast<std::size_t>(i)];
    Vec3 mean = sum * (1.0 / static_cast<double>(members.size()));
    Vec3 c = centroids[static_cast<std::size_t>(m)];
    if (std::abs(mean.x - c.x) > 1e-9 || std::abs(mean.y - c.y) > 1e-9 ||
        std::abs(mean.z - c.z) > 1e-9)
      throw ParseError("centroid is not the member mean");
  }

  std::set<std::pair<int, int>> crossing;
  for (const Bond &b : g.bonds) {
    int a = parent[static_cast<std::size_t>(b.i)];
    int c = parent[static_cast<std::size_t>(b.j)];
    if (a != c) crossing.insert({std::min(a, c), std::max(a, c)});
  }
  std::set<std::pair<int, int>> declared(edges.begin(), edges.end());
  if (declared != crossing)
    throw ParseError("motif edges do not match the crossing bonds");

  // Each motif's induced subgraph must be connected.
  for (int m = 0; m < size(); ++m) {
    const auto &members = motifs[static_cast<std::size_t>(m)];
    if (members.size() == 1) continue;
    std::map<int, std::vector<int>> adj;
    for (const Bond &b : g.bonds)
      if (parent[static_cast<std::size_t>(b.i)] == m &&
          parent[static_cast<std::size_t>(b.j)] == m) {
        adj[b.i].push_back(b.j);
        adj[b.j].push_back(b.i);
      }
    std::set<int> seen{members[0]};
    std::vector<int> queue{members[0]};
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      for (int w : adj[v])
        if (seen.insert(w).second) queue.push_back(w);
    }
    if (seen.size() != members.size()) throw ParseError("disconnected motif");
  }
}

void to_json(nlohmann::json &j, const MotifGraph &mg) {
  j = nlohmann::json::object();
  j["motifs"] = mg.motifs;
  auto &edges = j["edges"] = nlohmann::json::array();
  for (const auto &[a, b] : mg.edges) edges.push_back({a, b});
  auto &centroids = j["centroids"] = nlohmann::json::array();
  for (const Vec3 &c : mg.centroids) centroids.push_back({c.x, c.y, c.z});
}

}  // namespace cpiformer
