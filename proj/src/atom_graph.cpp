//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/atom_graph.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "cpiformer/errors.hpp"

namespace cpiformer {

std::string to_string(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return "single";
    case BondOrder::kDouble: return "double";
    case BondOrder::kTriple: return "triple";
    case BondOrder::kAromatic: return "aromatic";
  }
  return "single";
}

BondOrder bond_order_from_string(const std::string &s) {
  if (s == "single") return BondOrder::kSingle;
  if (s == "double") return BondOrder::kDouble;
  if (s == "triple") return BondOrder::kTriple;
  if (s == "aromatic") return BondOrder::kAromatic;
  throw ParseError("unknown bond order \"" + s + "\"");
}

bool is_hydrogen(const std::string &element) {
  if (element.size() != 1) return false;
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(element[0])));
  return c == 'H' || c == 'D' || c == 'T';
}

void AtomGraph::validate() const {
  const int n = size();
  if (coords.size() != atoms.size())
    throw ParseError("coords length " + std::to_string(coords.size()) +
                     " does not match atom count " + std::to_string(atoms.size()));
  for (const Vec3 &p : coords)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw ParseError("non-finite coordinate");
  for (const Atom &a : atoms)
    if (is_hydrogen(a.element))
      throw ParseError("hydrogen atom present in heavy-atom graph");
  std::set<std::pair<int, int>> seen;
  for (const Bond &b : bonds) {
    if (b.i < 0 || b.i >= n || b.j < 0 || b.j >= n)
      throw ParseError("bond index out of range: (" + std::to_string(b.i) + ", " +
                       std::to_string(b.j) + ") with " + std::to_string(n) + " atoms");
    if (b.i == b.j) throw ParseError("self-loop bond on atom " + std::to_string(b.i));
    if (b.i > b.j) throw ParseError("bond not normalized to i < j");
    if (!seen.insert({b.i, b.j}).second)
      throw ParseError("duplicate bond (" + std::to_string(b.i) + ", " +
                       std::to_string(b.j) + ")");
  }
}

void to_json(nlohmann::json &j, const AtomGraph &g) {
  j = nlohmann::json::object();
  auto &atoms = j["atoms"] = nlohmann::json::array();
  for (const Atom &a : g.atoms) {
    nlohmann::json ja{{"element", a.element}};
    if (a.residue_id) ja["residue_id"] = *a.residue_id;
    if (a.residue_name) ja["residue_name"] = *a.residue_name;
    if (a.backbone) ja["backbone"] = *a.backbone;
    atoms.push_back(std::move(ja));
  }
  auto &bonds = j["bonds"] = nlohmann::json::array();
  for (const Bond &b : g.bonds)
    bonds.push_back({{"i", b.i}, {"j", b.j}, {"order", to_string(b.order)}});
  auto &coords = j["coords"] = nlohmann::json::array();
  for (const Vec3 &p : g.coords) coords.push_back({p.x, p.y, p.z});
}

void from_json(const nlohmann::json &j, AtomGraph &g) {
  g = AtomGraph{};
  for (const auto &ja : j.at("atoms")) {
    Atom a;
    a.element = ja.at("element").get<std::string>();
    if (ja.contains("residue_id")) a.residue_id = ja["residue_id"].get<int>();
    if (ja.contains("residue_name"))
      a.residue_name = ja["residue_name"].get<std::string>();
    if (ja.contains("backbone")) a.backbone = ja["backbone"].get<bool>();
    g.atoms.push_back(std::move(a));
  }
  for (const auto &jb : j.at("bonds")) {
    Bond b;
    b.i = jb.at("i").get<int>();
    b.j = jb.at("j").get<int>();
    b.order = bond_order_from_string(jb.at("order").get<std::string>());
    g.bonds.push_back(b);
  }
  for (const auto &jc : j.at("coords")) {
    if (!jc.is_array() || jc.size() != 3) throw ParseError("coords entry is not a 3-vector");
    g.coords.push_back({jc[0].get<double>(), jc[1].get<double>(), jc[2].get<double>()});
  }
  g.validate();
}

double min_cross_distance(const AtomGraph &compound, const AtomGraph &protein) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3 &p : compound.coords)
    for (const Vec3 &q : protein.coords) best = std::min(best, distance(p, q));
  return best;
}

ComplexValidation validate_complex(const AtomGraph &compound,
                                   const AtomGraph &protein, std::string id,
                                   std::optional<double> affinity) {
  if (compound.empty() || protein.empty())
    throw ParseError("validate_complex requires non-empty molecules");
  ComplexValidation result;
  result.min_distance = min_cross_distance(compound, protein);
  if (result.min_distance <= kComplexDistanceCutoff) {
    result.complex = Complex{std::move(id), compound, protein, affinity};
  }
  return result;
}

}  // namespace cpiformer
