//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cpiformer/dataset.hpp"
#include "cpiformer/errors.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/sdf.hpp"
#include "cpiformer/synth.hpp"
#include "test_util.hpp"

using namespace cpiformer;
using cpiformer::testing::TempDir;
using cpiformer::testing::write_file;

TEST_CASE("manifest rows parse with and without labels") {
  const std::string text =
      "{\"id\":\"a\",\"compound_path\":\"a.sdf\",\"protein_path\":\"a.pdb\",\"affinity\":5.25}\n"
      "\n"
      "{\"id\":\"b\",\"compound_path\":\"b.sdf\",\"protein_path\":\"b.pdb\"}\n"
      "{\"id\":\"c\",\"compound_path\":\"c.sdf\",\"protein_path\":\"c.pdb\",\"affinity\":null}\n";
  auto entries = parse_manifest(text);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].id == "a");
  CHECK(entries[0].compound_path == "a.sdf");
  CHECK(entries[0].protein_path == "a.pdb");
  REQUIRE(entries[0].affinity.has_value());
  CHECK(*entries[0].affinity == 5.25);
  CHECK_FALSE(entries[1].affinity.has_value());
  CHECK_FALSE(entries[2].affinity.has_value());
}

TEST_CASE("manifest rejects malformed rows") {
  CHECK_THROWS_AS(parse_manifest("not json\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest("[1,2]\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest("{\"id\":\"a\",\"protein_path\":\"p\"}\n"), ParseError);
  CHECK_THROWS_AS(
      parse_manifest("{\"id\":1,\"compound_path\":\"c\",\"protein_path\":\"p\"}\n"),
      ParseError);
  CHECK_THROWS_AS(
      parse_manifest(
          "{\"id\":\"a\",\"compound_path\":\"c\",\"protein_path\":\"p\",\"x\":1}\n"),
      ParseError);
  CHECK_THROWS_AS(
      parse_manifest("{\"id\":\"a\",\"compound_path\":\"c\",\"protein_path\":\"p\","
                     "\"affinity\":\"high\"}\n"),
      ParseError);
  // The failing line number is carried on the error.
  try {
    parse_manifest("{\"id\":\"a\",\"compound_path\":\"c\",\"protein_path\":\"p\"}\nboom\n");
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("manifest write/parse round trip") {
  std::vector<ManifestEntry> entries = {
      {"x1", "x1.sdf", "x1.pdb", 7.123456789012345},
      {"x2", "sub/x2.sdf", "sub/x2.pdb", std::nullopt},
  };
  std::ostringstream out;
  write_manifest(out, entries);
  auto back = parse_manifest(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == entries[0].id);
  CHECK(back[0].compound_path == entries[0].compound_path);
  CHECK(back[0].affinity == entries[0].affinity);
  CHECK_FALSE(back[1].affinity.has_value());
}

TEST_CASE("loading a manifest resolves paths against its directory") {
  TempDir tmp("manifest");
  write_file(tmp.file("m.jsonl"),
             "{\"id\":\"r\",\"compound_path\":\"mol.sdf\",\"protein_path\":\"prot.pdb\"}\n"
             "{\"id\":\"abs\",\"compound_path\":\"/abs/mol.sdf\",\"protein_path\":"
             "\"/abs/prot.pdb\"}\n");
  auto entries = load_manifest(tmp.file("m.jsonl"));
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].compound_path == tmp.file("mol.sdf"));
  CHECK(entries[0].protein_path == tmp.file("prot.pdb"));
  CHECK(entries[1].compound_path == "/abs/mol.sdf");

  CHECK_THROWS_AS(load_manifest(tmp.file("absent.jsonl")), IoError);
}

TEST_CASE("complex loading skips broken rows with reasons") {
  TempDir tmp("load");
  // Three good complexes from the generator.
  const std::string manifest = write_synthetic_set(tmp.path.string(), 3, 11);
  auto entries = load_manifest(manifest);
  REQUIRE(entries.size() == 3);

  ComplexSet all = load_complexes(entries, false);
  CHECK(all.complexes.size() == 3);
  CHECK(all.skipped.empty());
  for (const Complex &c : all.complexes) {
    CHECK(c.affinity.has_value());
    const double d = min_cross_distance(c.compound, c.protein);
    CHECK(d <= kComplexDistanceCutoff);
  }

  // A missing file, an unparseable compound, and a label-free row.
  entries.push_back({"gone", tmp.file("nope.sdf"), entries[0].protein_path, 1.0});
  write_file(tmp.file("broken.sdf"), "garbage\n");
  entries.push_back({"broken", tmp.file("broken.sdf"), entries[0].protein_path, 1.0});
  entries.push_back({"nolabel", entries[0].compound_path, entries[0].protein_path, {}});

  ComplexSet tolerant = load_complexes(entries, false);
  CHECK(tolerant.complexes.size() == 4);  // nolabel still loads
  REQUIRE(tolerant.skipped.size() == 2);
  CHECK(tolerant.skipped[0].id == "gone");
  CHECK(tolerant.skipped[0].reason.find("nope.sdf") != std::string::npos);
  CHECK(tolerant.skipped[1].id == "broken");

  ComplexSet labeled = load_complexes(entries, true);
  CHECK(labeled.complexes.size() == 3);
  REQUIRE(labeled.skipped.size() == 3);
  CHECK(labeled.skipped[2].id == "nolabel");
  CHECK(labeled.skipped[2].reason == "no affinity label");
}

TEST_CASE("complex loading rejects pairs outside contact range") {
  TempDir tmp("far");
  Rng rng(21);
  Complex c = generate_complex("far", rng);
  // Push the compound far away and write the pair out.
  for (Vec3 &p : c.compound.coords) p = p + Vec3{250.0, 0.0, 0.0};
  {
    std::ofstream sdf(tmp.file("far.sdf"));
    write_sdf(sdf, c.compound, "far");
  }
  std::string pdb_text;
  Rng rng2(21);
  generate_complex("far", rng2, {}, &pdb_text);
  write_file(tmp.file("far.pdb"), pdb_text);

  ComplexSet set = load_complexes({{"far", tmp.file("far.sdf"), tmp.file("far.pdb"), 1.0}},
                                  false);
  CHECK(set.complexes.empty());
  REQUIRE(set.skipped.size() == 1);
  CHECK(set.skipped[0].reason.find("exceeds") != std::string::npos);
}
