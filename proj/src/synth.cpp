//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>
#include <vector>

#include "cpiformer/dataset.hpp"
#include "cpiformer/errors.hpp"
#include "cpiformer/pdb.hpp"
#include "cpiformer/sdf.hpp"

namespace cpiformer {

namespace {

constexpr double kBondLength = 1.5;      // compound tree edges
constexpr double kPeptideLength = 1.33;  // C(i) to N(i+1)
constexpr double kJitter = 0.12;         // per-axis coordinate noise

Vec3 random_unit(Rng &rng) {
  for (;;) {
    Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double n = norm(v);
    if (n > 0.1 && n <= 1.0) return v * (1.0 / n);
  }
}

Vec3 jittered(Vec3 v, Rng &rng) {
  return v + Vec3{rng.uniform(-kJitter, kJitter), rng.uniform(-kJitter, kJitter),
                  rng.uniform(-kJitter, kJitter)};
}

std::string pick_element(Rng &rng) {
  const double u = rng.uniform();
  if (u < 0.55) return "C";
  if (u < 0.70) return "N";
  if (u < 0.85) return "O";
  if (u < 0.92) return "S";
  if (u < 0.96) return "F";
  return "Cl";
}

Vec3 centroid(const AtomGraph &g) {
  Vec3 sum;
  for (const Vec3 &p : g.coords) sum = sum + p;
  return sum * (1.0 / static_cast<double>(g.size()));
}

double max_radius(const AtomGraph &g, Vec3 center) {
  double r = 0.0;
  for (const Vec3 &p : g.coords) r = std::max(r, distance(p, center));
  return r;
}

struct TemplateAtom {
  const char *name;
  const char *element;
  Vec3 local;
};

struct Residue {
  const char *name;
  std::vector<TemplateAtom> atoms;
};

const Vec3 kN{0.000, 0.000, 0.000};
const Vec3 kCA{1.458, 0.000, 0.000};
const Vec3 kC{2.009, 1.420, 0.000};
const Vec3 kO{1.251, 2.390, 0.000};
const Vec3 kCB{2.010, -0.770, -1.200};

const std::vector<TemplateAtom> kBackboneAtoms = {
    {"N", "N", kN}, {"CA", "C", kCA}, {"C", "C", kC}, {"O", "O", kO}};

std::vector<TemplateAtom> with_sidechain(std::initializer_list<TemplateAtom> side) {
  std::vector<TemplateAtom> out = kBackboneAtoms;
  out.insert(out.end(), side);
  return out;
}

// Idealized local geometry per residue; connectivity comes from the standard
// residue bond tables keyed on these names, so only rough positions matter.
const std::vector<Residue> &residue_library() {
  static const std::vector<Residue> lib = {
      {"GLY", kBackboneAtoms},
      {"ALA", with_sidechain({{"CB", "C", kCB}})},
      {"SER", with_sidechain({{"CB", "C", kCB}, {"OG", "O", {2.010, -2.190, -1.230}}})},
      {"CYS", with_sidechain({{"CB", "C", kCB}, {"SG", "S", {2.050, -2.300, -1.500}}})},
      {"VAL", with_sidechain({{"CB", "C", kCB},
                              {"CG1", "C", {3.310, -1.470, -0.900}},
                              {"CG2", "C", {0.810, -1.570, -1.600}}})},
      {"LEU", with_sidechain({{"CB", "C", kCB},
                              {"CG", "C", {2.610, -2.070, -1.700}},
                              {"CD1", "C", {4.010, -2.570, -1.500}},
                              {"CD2", "C", {1.610, -3.070, -2.300}}})},
      {"ASP", with_sidechain({{"CB", "C", kCB},
                              {"CG", "C", {2.610, -2.070, -1.700}},
                              {"OD1", "O", {3.810, -2.370, -1.200}},
                              {"OD2", "O", {1.610, -2.970, -1.900}}})},
      {"LYS", with_sidechain({{"CB", "C", kCB},
                              {"CG", "C", {2.610, -2.070, -1.700}},
                              {"CD", "C", {3.110, -3.370, -2.200}},
                              {"CE", "C", {4.410, -3.970, -1.900}},
                              {"NZ", "N", {4.810, -5.270, -2.300}}})},
      {"PHE", with_sidechain({{"CB", "C", kCB},
                              {"CG", "C", {2.610, -2.070, -1.700}},
                              {"CD1", "C", {3.810, -2.670, -1.950}},
                              {"CE1", "C", {3.910, -4.030, -2.250}},
                              {"CZ", "C", {2.810, -4.840, -2.300}},
                              {"CE2", "C", {1.610, -4.270, -2.050}},
                              {"CD2", "C", {1.510, -2.900, -1.750}}})},
  };
  return lib;
}

void append_atom_record(std::string &out, int serial, const char *name,
                        const char *res_name, int res_seq, Vec3 p, const char *element) {
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "ATOM  %5d  %-3s %3s A%4d    %8.3f%8.3f%8.3f  1.00  0.00          %2s\n",
                serial, name, res_name, res_seq, p.x, p.y, p.z, element);
  out += buf;
}

}  // namespace

AtomGraph synth_compound(Rng &rng, const SynthConfig &cfg) {
  if (cfg.min_compound_atoms < 2 || cfg.max_compound_atoms < cfg.min_compound_atoms)
    throw ConfigError("synth: bad compound atom bounds");
  const int n = cfg.min_compound_atoms +
                static_cast<int>(rng.below(static_cast<std::uint64_t>(
                    cfg.max_compound_atoms - cfg.min_compound_atoms + 1)));
  AtomGraph g;
  g.atoms.push_back(Atom{pick_element(rng), {}, {}, {}});
  g.coords.push_back({0.0, 0.0, 0.0});

  for (int k = 1; k < n; ++k) {
    const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    Vec3 pos;
    for (int attempt = 0; attempt < 40; ++attempt) {
      pos = g.coords[static_cast<std::size_t>(parent)] + random_unit(rng) * kBondLength;
      bool clash = false;
      for (int j = 0; j < k; ++j)
        if (j != parent && distance(pos, g.coords[static_cast<std::size_t>(j)]) < 1.0)
          clash = true;
      if (!clash) break;
    }
    g.atoms.push_back(Atom{pick_element(rng), {}, {}, {}});
    g.coords.push_back(pos);
    const BondOrder order =
        rng.uniform() < 0.8 ? BondOrder::kSingle : BondOrder::kDouble;
    g.bonds.push_back(Bond{parent, k, order});
  }

  // Extra edges close rings; every bond on the new cycle becomes a kept bond.
  if (n >= 5) {
    std::set<std::pair<int, int>> have;
    for (const Bond &b : g.bonds) have.insert({b.i, b.j});
    const int closures = static_cast<int>(rng.below(3));
    for (int c = 0; c < closures; ++c) {
      int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!have.insert({a, b}).second) continue;
      g.bonds.push_back(Bond{a, b, BondOrder::kSingle});
    }
    std::sort(g.bonds.begin(), g.bonds.end(),
              [](const Bond &x, const Bond &y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  }
  g.validate();
  return g;
}

AtomGraph synth_protein(Rng &rng, const SynthConfig &cfg, std::string *pdb_text) {
  if (cfg.min_protein_atoms < 4 || cfg.max_protein_atoms < cfg.min_protein_atoms)
    throw ConfigError("synth: bad protein atom bounds");
  const int target = cfg.min_protein_atoms +
                     static_cast<int>(rng.below(static_cast<std::uint64_t>(
                         cfg.max_protein_atoms - cfg.min_protein_atoms + 1)));
  const auto &lib = residue_library();

  std::string text;
  Vec3 offset{0.0, 0.0, 0.0};
  int atoms = 0, residues = 0;
  while (atoms < target) {
    std::vector<const Residue *> fits;
    for (const Residue &r : lib)
      if (atoms + static_cast<int>(r.atoms.size()) <= cfg.max_protein_atoms)
        fits.push_back(&r);
    if (fits.empty()) break;
    const Residue &res = *fits[rng.below(fits.size())];

    for (const TemplateAtom &ta : res.atoms)
      append_atom_record(text, atoms++ + 1, ta.name, res.name, residues + 1,
                         jittered(offset + ta.local, rng), ta.element);
    ++residues;

    // Advance so the next residue's N sits one peptide bond from this C.
    Vec3 dir{0.85, rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45)};
    dir = dir * (1.0 / norm(dir));
    offset = offset + kC + dir * kPeptideLength;
  }
  text += "END\n";

  if (pdb_text != nullptr) *pdb_text = text;
  // Parsing the text we just wrote makes the in-memory graph identical to
  // its file form, bonds included.
  return parse_pdb(text);
}

double synthetic_affinity(const Complex &c) {
  const double m = static_cast<double>(c.compound.size());
  const double n = static_cast<double>(c.protein.size());
  const double dmin = min_cross_distance(c.compound, c.protein);
  return std::clamp(2.0 + 0.35 * m + 0.05 * n - 0.8 * dmin, 0.5, 13.5);
}

Complex generate_complex(const std::string &id, Rng &rng, const SynthConfig &cfg,
                         std::string *pdb_text) {
  if (!(cfg.min_gap > 0.0) || !(cfg.max_gap > cfg.min_gap + 0.3) ||
      cfg.max_gap > kComplexDistanceCutoff)
    throw ConfigError("synth: gap band must satisfy 0 < min_gap + 0.3 < max_gap <= 6");
  Complex c;
  c.id = id;
  c.compound = synth_compound(rng, cfg);
  c.protein = synth_protein(rng, cfg, pdb_text);

  const Vec3 cent_p = centroid(c.protein);
  const Vec3 cent_c = centroid(c.compound);
  const double start =
      15.0 + max_radius(c.protein, cent_p) + max_radius(c.compound, cent_c);
  const Vec3 u = random_unit(rng);
  const double gap = rng.uniform(cfg.min_gap + 0.25, cfg.max_gap);

  // Start well outside contact range and slide inward in 0.25 A steps. The
  // closest-contact distance changes by at most the step size, so the first
  // value under the threshold lies inside (gap - 0.25, gap).
  AtomGraph placed = c.compound;
  for (double t = 0.0;; t += 0.25) {
    if (t > 2.0 * start + 20.0)
      throw NumericError("synth: placement failed to reach the contact band");
    const Vec3 shift = cent_p + u * (start - t) - cent_c;
    for (std::size_t k = 0; k < placed.coords.size(); ++k)
      placed.coords[k] = c.compound.coords[k] + shift;
    if (min_cross_distance(placed, c.protein) < gap) break;
  }
  c.compound = std::move(placed);
  c.affinity = synthetic_affinity(c);
  return c;
}

std::string write_synthetic_set(const std::string &dir, int count, std::uint64_t seed,
                                const SynthConfig &cfg) {
  if (count < 1) throw ConfigError("synth: count must be positive");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  Rng rng(seed);
  std::vector<ManifestEntry> entries;
  for (int k = 0; k < count; ++k) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synth-%04d", k);
    const std::string id(idbuf);
    std::string pdb_text;
    Complex c = generate_complex(id, rng, cfg, &pdb_text);

    const std::string sdf_path = dir + "/" + id + ".sdf";
    std::ofstream sdf(sdf_path);
    if (!sdf) throw IoError("cannot write " + sdf_path);
    write_sdf(sdf, c.compound, id);

    const std::string pdb_path = dir + "/" + id + ".pdb";
    std::ofstream pdb(pdb_path);
    if (!pdb) throw IoError("cannot write " + pdb_path);
    pdb << pdb_text;

    entries.push_back({id, id + ".sdf", id + ".pdb", c.affinity});
  }

  const std::string manifest_path = dir + "/manifest.jsonl";
  std::ofstream mf(manifest_path);
  if (!mf) throw IoError("cannot write " + manifest_path);
  write_manifest(mf, entries);
  return manifest_path;
}

}  // namespace cpiformer
