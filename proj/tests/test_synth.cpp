//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <queue>
#include <set>
#include <string>

#include "cpiformer/dataset.hpp"
#include "cpiformer/errors.hpp"
#include "cpiformer/pdb.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/sdf.hpp"
#include "cpiformer/synth.hpp"
#include "test_util.hpp"

using namespace cpiformer;
using cpiformer::testing::TempDir;
using cpiformer::testing::slurp;

namespace {

bool connected(const AtomGraph &g) {
  if (g.empty()) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.size()));
  for (const Bond &b : g.bonds) {
    adj[static_cast<std::size_t>(b.i)].push_back(b.j);
    adj[static_cast<std::size_t>(b.j)].push_back(b.i);
  }
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    ++reached;
    for (int w : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        q.push(w);
      }
  }
  return reached == g.size();
}

}  // namespace

TEST_CASE("generated compounds stay inside their contract") {
  const std::set<std::string> allowed = {"C", "N", "O", "S", "F", "Cl"};
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    AtomGraph g = synth_compound(rng);
    g.validate();
    CHECK(g.size() >= 5);
    CHECK(g.size() <= 20);
    CHECK(connected(g));
    for (const Atom &a : g.atoms) {
      CHECK(allowed.count(a.element) == 1);
      CHECK_FALSE(a.residue_id.has_value());
    }
  }
  CHECK_THROWS_AS(synth_compound(rng, SynthConfig{1, 0, 20, 60, 3.0, 5.5}), ConfigError);
}

TEST_CASE("generated proteins are template-built peptide chains") {
  Rng rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    AtomGraph g = synth_protein(rng);
    g.validate();
    CHECK(g.size() >= 20);
    CHECK(g.size() <= 60);
    CHECK(connected(g));  // peptide bonds join consecutive residues

    int backbone = 0, max_residue = -1;
    for (const Atom &a : g.atoms) {
      REQUIRE(a.residue_id.has_value());
      REQUIRE(a.residue_name.has_value());
      CHECK(residue_template(*a.residue_name) != nullptr);
      if (a.backbone.value_or(false)) ++backbone;
      max_residue = std::max(max_residue, *a.residue_id);
    }
    // Each residue contributes exactly the four backbone atoms.
    CHECK(backbone == 4 * (max_residue + 1));
  }
}

TEST_CASE("the protein graph equals the parse of its own records") {
  Rng rng(63);
  std::string text;
  AtomGraph g = synth_protein(rng, {}, &text);
  CHECK(parse_pdb(text) == g);
}

TEST_CASE("generated complexes sit inside the contact band") {
  Rng rng(64);
  for (int trial = 0; trial < 30; ++trial) {
    Complex c = generate_complex("t" + std::to_string(trial), rng);
    const double d = min_cross_distance(c.compound, c.protein);
    CHECK(d > 3.0);
    CHECK(d < 5.5);
    REQUIRE(c.affinity.has_value());
    CHECK(*c.affinity == synthetic_affinity(c));
    CHECK(*c.affinity >= 0.5);
    CHECK(*c.affinity <= 13.5);
  }

  Rng a(65), b(65);
  Complex c1 = generate_complex("same", a);
  Complex c2 = generate_complex("same", b);
  CHECK(c1.compound == c2.compound);
  CHECK(c1.protein == c2.protein);
  CHECK(c1.affinity == c2.affinity);

  CHECK_THROWS_AS(generate_complex("bad", a, SynthConfig{5, 20, 20, 60, 5.4, 5.5}),
                  ConfigError);
}

TEST_CASE("written datasets load back complete and in range") {
  TempDir tmp("synthset");
  const std::string manifest = write_synthetic_set(tmp.path.string(), 4, 77);
  CHECK(manifest == tmp.file("manifest.jsonl"));

  auto entries = load_manifest(manifest);
  REQUIRE(entries.size() == 4);
  ComplexSet set = load_complexes(entries, true);
  CHECK(set.skipped.empty());
  REQUIRE(set.complexes.size() == 4);

  // File coordinates are rounded for storage; structure survives exactly.
  Rng rng(77);
  for (int k = 0; k < 4; ++k) {
    Complex mem = generate_complex(entries[static_cast<std::size_t>(k)].id, rng);
    const Complex &disk = set.complexes[static_cast<std::size_t>(k)];
    CHECK(disk.compound.atoms == mem.compound.atoms);
    CHECK(disk.compound.bonds == mem.compound.bonds);
    CHECK(disk.protein == mem.protein);  // written before parsing, so exact
    REQUIRE(disk.compound.size() == mem.compound.size());
    for (int i = 0; i < disk.compound.size(); ++i)
      CHECK(distance(disk.compound.coords[static_cast<std::size_t>(i)],
                     mem.compound.coords[static_cast<std::size_t>(i)]) < 1e-3);
    CHECK(disk.affinity == mem.affinity);  // label rides the manifest untouched
  }
}

TEST_CASE("dataset generation is byte deterministic") {
  TempDir ta("synthdet-a"), tb("synthdet-b");
  write_synthetic_set(ta.path.string(), 3, 123);
  write_synthetic_set(tb.path.string(), 3, 123);
  for (const char *name :
       {"manifest.jsonl", "synth-0000.sdf", "synth-0000.pdb", "synth-0002.pdb"})
    CHECK(slurp(ta.file(name)) == slurp(tb.file(name)));

  TempDir tc("synthdet-c");
  write_synthetic_set(tc.path.string(), 3, 124);
  CHECK(slurp(ta.file("synth-0000.sdf")) != slurp(tc.file("synth-0000.sdf")));
}
