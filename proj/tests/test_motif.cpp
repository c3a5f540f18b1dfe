//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpiformer/atom_graph.hpp"
#include "cpiformer/errors.hpp"
#include "cpiformer/motif.hpp"
#include "cpiformer/pdb.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/sdf.hpp"

using namespace cpiformer;

namespace {

std::string data_path(const std::string &name) {
  return std::string(CPIFORMER_TEST_DATA_DIR) + "/" + name;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "cannot open ", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Oracle 1: union of the edges of every simple cycle, found by exhaustive
// path search anchored at each cycle's smallest vertex.
std::set<int> cycle_edge_union(const AtomGraph &g) {
  const int n = g.size();
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (int b = 0; b < static_cast<int>(g.bonds.size()); ++b) {
    adj[static_cast<std::size_t>(g.bonds[static_cast<std::size_t>(b)].i)].push_back(
        {g.bonds[static_cast<std::size_t>(b)].j, b});
    adj[static_cast<std::size_t>(g.bonds[static_cast<std::size_t>(b)].j)].push_back(
        {g.bonds[static_cast<std::size_t>(b)].i, b});
  }

  std::set<int> out;
  std::vector<char> on_path(static_cast<std::size_t>(n), 0);
  std::vector<int> path_edges;

  std::function<void(int, int, int)> walk = [&](int v, int start, int entry_edge) {
    for (auto [w, e] : adj[static_cast<std::size_t>(v)]) {
      if (e == entry_edge) continue;
      if (w == start) {
        if (path_edges.size() + 1 >= 3) {
          out.insert(path_edges.begin(), path_edges.end());
          out.insert(e);
        }
      } else if (w > start && !on_path[static_cast<std::size_t>(w)]) {
        on_path[static_cast<std::size_t>(w)] = 1;
        path_edges.push_back(e);
        walk(w, start, e);
        path_edges.pop_back();
        on_path[static_cast<std::size_t>(w)] = 0;
      }
    }
  };

  for (int s = 0; s < n; ++s) {
    on_path[static_cast<std::size_t>(s)] = 1;
    walk(s, s, -1);
    on_path[static_cast<std::size_t>(s)] = 0;
  }
  return out;
}

// Oracle 2: a bond lies on a cycle iff its endpoints stay connected after
// deleting it.
bool connected_without(const AtomGraph &g, int skip, int a, int b) {
  std::set<int> seen{a};
  std::vector<int> queue{a};
  while (!queue.empty()) {
    int v = queue.back();
    queue.pop_back();
    if (v == b) return true;
    for (int e = 0; e < static_cast<int>(g.bonds.size()); ++e) {
      if (e == skip) continue;
      const Bond &bd = g.bonds[static_cast<std::size_t>(e)];
      int w = -1;
      if (bd.i == v) w = bd.j;
      if (bd.j == v) w = bd.i;
      if (w >= 0 && seen.insert(w).second) queue.push_back(w);
    }
  }
  return false;
}

std::set<int> ring_bonds_by_deletion(const AtomGraph &g) {
  std::set<int> out;
  for (int e = 0; e < static_cast<int>(g.bonds.size()); ++e)
    if (connected_without(g, e, g.bonds[static_cast<std::size_t>(e)].i,
                          g.bonds[static_cast<std::size_t>(e)].j))
      out.insert(e);
  return out;
}

// Oracle 3: connected components over a kept-bond mask, by plain BFS.
std::vector<std::vector<int>> components_over(const AtomGraph &g,
                                              const std::vector<char> &kept) {
  const int n = g.size();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] != -1) continue;
    int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<int> queue{s};
    comp[static_cast<std::size_t>(s)] = id;
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      out[static_cast<std::size_t>(id)].push_back(v);
      for (int e = 0; e < static_cast<int>(g.bonds.size()); ++e) {
        if (!kept[static_cast<std::size_t>(e)]) continue;
        const Bond &bd = g.bonds[static_cast<std::size_t>(e)];
        int w = -1;
        if (bd.i == v) w = bd.j;
        if (bd.j == v) w = bd.i;
        if (w >= 0 && comp[static_cast<std::size_t>(w)] == -1) {
          comp[static_cast<std::size_t>(w)] = id;
          queue.push_back(w);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

AtomGraph random_connected_graph(Rng &rng) {
  const int n = 2 + static_cast<int>(rng.below(29));
  AtomGraph g;
  for (int i = 0; i < n; ++i) {
    g.atoms.push_back(Atom{"C", {}, {}, {}});
    g.coords.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)});
  }
  const BondOrder orders[] = {BondOrder::kSingle, BondOrder::kDouble,
                              BondOrder::kTriple, BondOrder::kAromatic};
  std::set<std::pair<int, int>> used;
  for (int i = 1; i < n; ++i) {
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    used.insert({j, i});
    g.bonds.push_back(Bond{j, i, orders[rng.below(4)]});
  }
  for (std::uint64_t extra = rng.below(4); extra > 0; --extra) {
    int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    g.bonds.push_back(Bond{a, b, orders[rng.below(4)]});
  }
  std::sort(g.bonds.begin(), g.bonds.end(),
            [](const Bond &x, const Bond &y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  g.validate();
  return g;
}

std::set<std::vector<int>> motif_set(const MotifGraph &mg) {
  return {mg.motifs.begin(), mg.motifs.end()};
}

}  // namespace

TEST_CASE("ring bonds: lone edge is a bridge, cycle edges are not") {
  AtomGraph ethane = parse_sdf(read_file(data_path("ethane.sdf")));
  CHECK(find_ring_bonds(ethane).empty());

  AtomGraph benzene = parse_sdf(read_file(data_path("benzene.sdf")));
  std::set<int> all{0, 1, 2, 3, 4, 5};
  CHECK(find_ring_bonds(benzene) == all);
}

TEST_CASE("ring bonds: fused bicyclic matches the simple-cycle union oracle") {
  AtomGraph naphthalene = parse_sdf(read_file(data_path("naphthalene.sdf")));
  REQUIRE(naphthalene.bonds.size() == 11);
  std::set<int> oracle = cycle_edge_union(naphthalene);
  // All 11 bonds of the fused pair of rings lie on some simple cycle.
  CHECK(oracle.size() == 11);
  CHECK(find_ring_bonds(naphthalene) == oracle);
}

TEST_CASE("ring bonds: corpus molecules match both oracles") {
  for (const char *f : {"ethane.sdf", "benzene.sdf", "acetone.sdf", "naphthalene.sdf",
                        "toluene.sdf", "butadiene.sdf", "cyclohexane.sdf"}) {
    AtomGraph g = parse_sdf(read_file(data_path(f)));
    std::set<int> got = find_ring_bonds(g);
    CHECK_MESSAGE(got == cycle_edge_union(g), f);
    CHECK_MESSAGE(got == ring_bonds_by_deletion(g), f);
  }
}

TEST_CASE("ring bonds: random graphs match the deletion oracle") {
  Rng rng(61);
  for (int t = 0; t < 200; ++t) {
    AtomGraph g = random_connected_graph(rng);
    CHECK(find_ring_bonds(g) == ring_bonds_by_deletion(g));
  }
}

TEST_CASE("compound rule: single bond splits, ring holds together") {
  AtomGraph ethane = parse_sdf(read_file(data_path("ethane.sdf")));
  MotifGraph m1 = decompose_compound(ethane);
  CHECK(m1.motifs == std::vector<std::vector<int>>{{0}, {1}});
  CHECK(m1.edges == std::vector<std::pair<int, int>>{{0, 1}});

  AtomGraph benzene = parse_sdf(read_file(data_path("benzene.sdf")));
  MotifGraph m2 = decompose_compound(benzene);
  CHECK(m2.motifs == std::vector<std::vector<int>>{{0, 1, 2, 3, 4, 5}});
  CHECK(m2.edges.empty());
}

TEST_CASE("compound rule: ketone keeps the double bond only") {
  // Atom order in the file: C, C, C, O with bonds C0-C1, C1-C2, C1=O3.
  AtomGraph acetone = parse_sdf(read_file(data_path("acetone.sdf")));
  MotifGraph mg = decompose_compound(acetone);
  CHECK(mg.motifs == std::vector<std::vector<int>>{{0}, {1, 3}, {2}});
  CHECK(mg.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(mg.parent == std::vector<int>{0, 1, 2, 1});
}

TEST_CASE("compound rule: further worked molecules") {
  AtomGraph toluene = parse_sdf(read_file(data_path("toluene.sdf")));
  MotifGraph mt = decompose_compound(toluene);
  CHECK(mt.motifs == std::vector<std::vector<int>>{{0, 1, 2, 3, 4, 5}, {6}});
  CHECK(mt.edges == std::vector<std::pair<int, int>>{{0, 1}});

  AtomGraph butadiene = parse_sdf(read_file(data_path("butadiene.sdf")));
  MotifGraph mb = decompose_compound(butadiene);
  CHECK(mb.motifs == std::vector<std::vector<int>>{{0, 1}, {2, 3}});
  CHECK(mb.edges == std::vector<std::pair<int, int>>{{0, 1}});

  // All-single ring: the ring rule outranks the single-bond rule.
  AtomGraph cyclohexane = parse_sdf(read_file(data_path("cyclohexane.sdf")));
  MotifGraph mc = decompose_compound(cyclohexane);
  CHECK(mc.motifs == std::vector<std::vector<int>>{{0, 1, 2, 3, 4, 5}});
}

TEST_CASE("compound rule: motifs equal components from an independent union") {
  for (const char *f : {"ethane.sdf", "benzene.sdf", "acetone.sdf", "naphthalene.sdf",
                        "toluene.sdf", "butadiene.sdf", "cyclohexane.sdf"}) {
    AtomGraph g = parse_sdf(read_file(data_path(f)));
    std::vector<char> kept(g.bonds.size(), 0);
    std::set<int> rings = ring_bonds_by_deletion(g);
    for (int e = 0; e < static_cast<int>(g.bonds.size()); ++e)
      kept[static_cast<std::size_t>(e)] =
          g.bonds[static_cast<std::size_t>(e)].order != BondOrder::kSingle ||
          rings.count(e) > 0;
    auto oracle = components_over(g, kept);
    MotifGraph mg = decompose_compound(g);
    CHECK_MESSAGE(motif_set(mg) == std::set<std::vector<int>>(oracle.begin(), oracle.end()), f);
  }
}

TEST_CASE("compound rule: partition properties on random graphs") {
  Rng rng(62);
  for (int t = 0; t < 1000; ++t) {
    AtomGraph g = random_connected_graph(rng);
    MotifGraph mg = decompose_compound(g);

    // Partition: parent total, motifs disjoint and covering.
    REQUIRE(static_cast<int>(mg.parent.size()) == g.size());
    std::vector<char> covered(static_cast<std::size_t>(g.size()), 0);
    for (int m = 0; m < mg.size(); ++m)
      for (int i : mg.motifs[static_cast<std::size_t>(m)]) {
        REQUIRE_FALSE(covered[static_cast<std::size_t>(i)]);
        covered[static_cast<std::size_t>(i)] = 1;
        REQUIRE(mg.parent[static_cast<std::size_t>(i)] == m);
      }
    for (char c : covered) REQUIRE(c);

    // Motif order: by smallest member.
    for (int m = 1; m < mg.size(); ++m)
      REQUIRE(mg.motifs[static_cast<std::size_t>(m - 1)][0] < mg.motifs[static_cast<std::size_t>(m)][0]);

    // Kept bonds stay inside a motif, cut bonds cross motifs.
    std::set<int> rings = ring_bonds_by_deletion(g);
    for (int e = 0; e < static_cast<int>(g.bonds.size()); ++e) {
      const Bond &b = g.bonds[static_cast<std::size_t>(e)];
      bool kept = b.order != BondOrder::kSingle || rings.count(e) > 0;
      bool same = mg.parent[static_cast<std::size_t>(b.i)] == mg.parent[static_cast<std::size_t>(b.j)];
      REQUIRE(kept == same);
    }

    mg.validate(g);
  }
}

TEST_CASE("centroids: member means, translation-equivariant") {
  Rng rng(63);
  for (int t = 0; t < 50; ++t) {
    AtomGraph g = random_connected_graph(rng);
    MotifGraph mg = decompose_compound(g);
    for (int m = 0; m < mg.size(); ++m) {
      Vec3 sum{0, 0, 0};
      for (int i : mg.motifs[static_cast<std::size_t>(m)])
        sum = sum + g.coords[static_cast<std::size_t>(i)];
      Vec3 mean = sum * (1.0 / static_cast<double>(mg.motifs[static_cast<std::size_t>(m)].size()));
      CHECK(std::abs(mg.centroids[static_cast<std::size_t>(m)].x - mean.x) <= 1e-9);
      CHECK(std::abs(mg.centroids[static_cast<std::size_t>(m)].y - mean.y) <= 1e-9);
      CHECK(std::abs(mg.centroids[static_cast<std::size_t>(m)].z - mean.z) <= 1e-9);
    }

    Vec3 shift{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    AtomGraph moved = g;
    for (Vec3 &p : moved.coords) p = p + shift;
    MotifGraph mg2 = decompose_compound(moved);
    REQUIRE(mg2.motifs == mg.motifs);
    for (int m = 0; m < mg.size(); ++m) {
      Vec3 want = mg.centroids[static_cast<std::size_t>(m)] + shift;
      CHECK(std::abs(mg2.centroids[static_cast<std::size_t>(m)].x - want.x) <= 1e-9);
      CHECK(std::abs(mg2.centroids[static_cast<std::size_t>(m)].y - want.y) <= 1e-9);
      CHECK(std::abs(mg2.centroids[static_cast<std::size_t>(m)].z - want.z) <= 1e-9);
    }
  }
}

TEST_CASE("protein rule: dipeptide backbone chain") {
  AtomGraph g = parse_pdb(read_file(data_path("glygly.pdb")));
  MotifGraph mg = decompose_protein(g);
  CHECK(mg.motifs == std::vector<std::vector<int>>{{0, 1, 2, 3}, {4, 5, 6, 7}});
  CHECK(mg.edges == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK_FALSE(mg.backbone_fallback);
  mg.validate(g);
}

TEST_CASE("protein rule: alanine splits at the alpha-beta bond") {
  AtomGraph g = parse_pdb(read_file(data_path("ala.pdb")));
  MotifGraph mg = decompose_protein(g);
  CHECK(mg.motifs == std::vector<std::vector<int>>{{0, 1, 2, 3}, {4}});
  CHECK(mg.edges == std::vector<std::pair<int, int>>{{0, 1}});
  mg.validate(g);
}

TEST_CASE("protein rule: phenylalanine keeps its ring whole") {
  // File order: N CA C O CB CG CD1 CE1 CZ CE2 CD2.
  AtomGraph g = parse_pdb(read_file(data_path("phe.pdb")));
  MotifGraph mg = decompose_protein(g);
  CHECK(mg.motifs ==
        std::vector<std::vector<int>>{{0, 1, 2, 3}, {4}, {5, 6, 7, 8, 9, 10}});
  // Alpha-beta cut and beta-ring cut.
  CHECK(mg.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  mg.validate(g);
}

TEST_CASE("protein rule: proline ring stays one sidechain motif") {
  // ALA (N CA C O CB) then PRO (N CA C O CB CG CD); the PRO five-ring runs
  // through its backbone N and CA, so its sidechain singles are ring bonds.
  AtomGraph g = parse_pdb(read_file(data_path("alapro.pdb")));
  MotifGraph mg = decompose_protein(g);
  CHECK(mg.motifs == std::vector<std::vector<int>>{
                         {0, 1, 2, 3}, {4}, {5, 6, 7, 8}, {9, 10, 11}});
  // Cuts: ALA CA-CB, peptide, PRO CA-CB and PRO N-CD (the last two collapse
  // onto one motif edge).
  CHECK(mg.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {2, 3}});
  mg.validate(g);
}

TEST_CASE("protein rule: residue without backbone atoms falls back") {
  AtomGraph g = parse_pdb(read_file(data_path("hetres.pdb")));
  MotifGraph mg = decompose_protein(g);
  CHECK(mg.backbone_fallback);
  CHECK(mg.motifs == std::vector<std::vector<int>>{{0}, {1}, {2}});
  CHECK(mg.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  mg.validate(g);
}

TEST_CASE("decomposition is deterministic") {
  for (const char *f : {"acetone.sdf", "toluene.sdf", "naphthalene.sdf"}) {
    AtomGraph g = parse_sdf(read_file(data_path(f)));
    MotifGraph a = decompose_compound(g);
    MotifGraph b = decompose_compound(g);
    CHECK(a.motifs == b.motifs);
    CHECK(a.edges == b.edges);
    CHECK(a.parent == b.parent);
  }
}

TEST_CASE("motif embedding means") {
  // Two motifs over three atoms: {0,1} and {2}.
  MotifGraph mg;
  mg.motifs = {{0, 1}, {2}};
  mg.parent = {0, 0, 1};
  mg.centroids = {{0, 0, 0}, {0, 0, 0}};

  std::vector<std::vector<double>> atoms = {{1.0, 2.0}, {-1.0, -2.0}, {3.0, 4.0}};
  auto out = motif_init_embedding(mg, atoms);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == std::vector<double>{0.0, 0.0});  // x and -x average to zero
  CHECK(out[1] == std::vector<double>{3.0, 4.0});  // singleton mean is identity

  // Unit basis vectors averaged over one motif of three atoms.
  MotifGraph one;
  one.motifs = {{0, 1, 2}};
  one.parent = {0, 0, 0};
  one.centroids = {{0, 0, 0}};
  std::vector<std::vector<double>> basis = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  auto mean = motif_init_embedding(one, basis);
  REQUIRE(mean.size() == 1);
  CHECK(mean[0][0] == doctest::Approx(1.0 / 3));
  CHECK(mean[0][1] == doctest::Approx(1.0 / 3));
  CHECK(mean[0][2] == doctest::Approx(1.0 / 3));

  std::vector<std::vector<double>> wrong_count = {{1.0}};
  CHECK_THROWS_AS(motif_init_embedding(mg, wrong_count), ShapeError);
}

TEST_CASE("motif graph serializes to the documented shape") {
  AtomGraph g = parse_sdf(read_file(data_path("acetone.sdf")));
  MotifGraph mg = decompose_compound(g);
  nlohmann::json j = mg;
  CHECK(j["motifs"] == nlohmann::json({{0}, {1, 3}, {2}}));
  CHECK(j["edges"] == nlohmann::json({{0, 1}, {1, 2}}));
  REQUIRE(j["centroids"].size() == 3);
  CHECK(j["centroids"][0][0].get<double>() == doctest::Approx(-1.29));
}
