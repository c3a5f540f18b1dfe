//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/pdb.hpp"

#include <cctype>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

constexpr double kPeptideBondCutoff = 2.0;      // C(i)-N(i+1)
constexpr double kHeuristicBondCutoff = 1.9;    // nonstandard residues

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string field(const std::string &line, std::size_t pos, std::size_t len) {
  if (line.size() <= pos) return "";
  return trim(line.substr(pos, std::min(len, line.size() - pos)));
}

double coord_field(const std::string &line, std::size_t pos, int line_no,
                   const char *what) {
  std::string f = field(line, pos, 8);
  if (f.empty()) throw ParseError(std::string("missing ") + what + " coordinate", line_no);
  try {
    std::size_t used = 0;
    double v = std::stod(f, &used);
    if (used != f.size()) throw std::invalid_argument(f);
    return v;
  } catch (const std::exception &) {
    throw ParseError(std::string("non-numeric ") + what + " coordinate \"" + f + "\"",
                     line_no);
  }
}

// Element from columns 77-78 when present, otherwise the first alphabetic
// character of the atom name (correct for amino-acid atoms; CA is a carbon
// here, never calcium).
std::string deduce_element(const std::string &name, const std::string &elem_col) {
  if (!elem_col.empty()) {
    std::string e = elem_col;
    e[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(e[0])));
    for (std::size_t i = 1; i < e.size(); ++i)
      e[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(e[i])));
    return e;
  }
  for (char c : name)
    if (std::isalpha(static_cast<unsigned char>(c)))
      return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return "";
}

const std::vector<TemplateBond> kBackboneBonds = {
    {"N", "CA", BondOrder::kSingle},
    {"CA", "C", BondOrder::kSingle},
    {"C", "O", BondOrder::kDouble},
    {"C", "OXT", BondOrder::kSingle},
    {"CA", "CB", BondOrder::kSingle},
};

const std::map<std::string, std::vector<TemplateBond>> kSidechainBonds = {
    {"GLY", {}},
    {"ALA", {}},
    {"SER", {{"CB", "OG", BondOrder::kSingle}}},
    {"CYS", {{"CB", "SG", BondOrder::kSingle}}},
    {"THR", {{"CB", "OG1", BondOrder::kSingle}, {"CB", "CG2", BondOrder::kSingle}}},
    {"VAL", {{"CB", "CG1", BondOrder::kSingle}, {"CB", "CG2", BondOrder::kSingle}}},
    {"LEU",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD1", BondOrder::kSingle},
      {"CG", "CD2", BondOrder::kSingle}}},
    {"ILE",
     {{"CB", "CG1", BondOrder::kSingle},
      {"CB", "CG2", BondOrder::kSingle},
      {"CG1", "CD1", BondOrder::kSingle}}},
    {"PRO",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD", BondOrder::kSingle},
      {"CD", "N", BondOrder::kSingle}}},
    {"MET",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "SD", BondOrder::kSingle},
      {"SD", "CE", BondOrder::kSingle}}},
    {"PHE",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD1", BondOrder::kAromatic},
      {"CD1", "CE1", BondOrder::kAromatic},
      {"CE1", "CZ", BondOrder::kAromatic},
      {"CZ", "CE2", BondOrder::kAromatic},
      {"CE2", "CD2", BondOrder::kAromatic},
      {"CD2", "CG", BondOrder::kAromatic}}},
    {"TYR",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD1", BondOrder::kAromatic},
      {"CD1", "CE1", BondOrder::kAromatic},
      {"CE1", "CZ", BondOrder::kAromatic},
      {"CZ", "CE2", BondOrder::kAromatic},
      {"CE2", "CD2", BondOrder::kAromatic},
      {"CD2", "CG", BondOrder::kAromatic},
      {"CZ", "OH", BondOrder::kSingle}}},
    {"TRP",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD1", BondOrder::kAromatic},
      {"CD1", "NE1", BondOrder::kAromatic},
      {"NE1", "CE2", BondOrder::kAromatic},
      {"CE2", "CD2", BondOrder::kAromatic},
      {"CD2", "CG", BondOrder::kAromatic},
      {"CE2", "CZ2", BondOrder::kAromatic},
      {"CZ2", "CH2", BondOrder::kAromatic},
      {"CH2", "CZ3", BondOrder::kAromatic},
      {"CZ3", "CE3", BondOrder::kAromatic},
      {"CE3", "CD2", BondOrder::kAromatic}}},
    {"ASP",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "OD1", BondOrder::kDouble},
      {"CG", "OD2", BondOrder::kSingle}}},
    {"ASN",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "OD1", BondOrder::kDouble},
      {"CG", "ND2", BondOrder::kSingle}}},
    {"GLU",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD", BondOrder::kSingle},
      {"CD", "OE1", BondOrder::kDouble},
      {"CD", "OE2", BondOrder::kSingle}}},
    {"GLN",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD", BondOrder::kSingle},
      {"CD", "OE1", BondOrder::kDouble},
      {"CD", "NE2", BondOrder::kSingle}}},
    {"LYS",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD", BondOrder::kSingle},
      {"CD", "CE", BondOrder::kSingle},
      {"CE", "NZ", BondOrder::kSingle}}},
    {"ARG",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "CD", BondOrder::kSingle},
      {"CD", "NE", BondOrder::kSingle},
      {"NE", "CZ", BondOrder::kSingle},
      {"CZ", "NH1", BondOrder::kDouble},
      {"CZ", "NH2", BondOrder::kSingle}}},
    {"HIS",
     {{"CB", "CG", BondOrder::kSingle},
      {"CG", "ND1", BondOrder::kAromatic},
      {"ND1", "CE1", BondOrder::kAromatic},
      {"CE1", "NE2", BondOrder::kAromatic},
      {"NE2", "CD2", BondOrder::kAromatic},
      {"CD2", "CG", BondOrder::kAromatic}}},
};

}  // namespace

const std::vector<TemplateBond> *residue_template(const std::string &res_name) {
  auto it = kSidechainBonds.find(res_name);
  return it == kSidechainBonds.end() ? nullptr : &it->second;
}

AtomGraph parse_pdb(std::istream &in) {
  struct PdbAtom {
    std::string name;
    std::string res_name;
    int residue = -1;  // sequential index over (chain, resSeq, iCode) keys
  };

  AtomGraph g;
  std::vector<PdbAtom> meta;
  std::map<std::tuple<char, std::string, char>, int> residue_index;
  std::vector<std::string> residue_names;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("ATOM", 0) != 0) continue;
    const char alt_loc = line.size() > 16 ? line[16] : ' ';
    if (alt_loc != ' ' && alt_loc != 'A') continue;

    PdbAtom pa;
    pa.name = field(line, 12, 4);
    pa.res_name = field(line, 17, 3);
    const char chain = line.size() > 21 ? line[21] : ' ';
    const std::string res_seq = field(line, 22, 4);
    const char i_code = line.size() > 26 ? line[26] : ' ';

    const std::string elem = deduce_element(pa.name, field(line, 76, 2));
    if (elem.empty()) throw ParseError("cannot determine element for atom \"" + pa.name + "\"", line_no);
    if (is_hydrogen(elem)) continue;

    Vec3 p;
    p.x = coord_field(line, 30, line_no, "x");
    p.y = coord_field(line, 38, line_no, "y");
    p.z = coord_field(line, 46, line_no, "z");

    auto key = std::make_tuple(chain, res_seq, i_code);
    auto [it, inserted] = residue_index.try_emplace(key, static_cast<int>(residue_names.size()));
    if (inserted) residue_names.push_back(pa.res_name);
    pa.residue = it->second;

    Atom a;
    a.element = elem;
    a.residue_id = pa.residue;
    a.residue_name = pa.res_name;
    a.backbone = (pa.name == "N" || pa.name == "CA" || pa.name == "C" || pa.name == "O");
    g.atoms.push_back(std::move(a));
    g.coords.push_back(p);
    meta.push_back(std::move(pa));
  }

  if (g.empty()) throw ParseError("no ATOM records");

  const int n_residues = static_cast<int>(residue_names.size());
  // First atom of each name within a residue wins for bond lookups.
  std::vector<std::map<std::string, int>> by_name(static_cast<std::size_t>(n_residues));
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_residues));
  for (int i = 0; i < g.size(); ++i) {
    const auto &pa = meta[static_cast<std::size_t>(i)];
    by_name[static_cast<std::size_t>(pa.residue)].try_emplace(pa.name, i);
    members[static_cast<std::size_t>(pa.residue)].push_back(i);
  }

  std::set<std::pair<int, int>> seen;
  auto add_bond = [&](int i, int j, BondOrder order) {
    if (i > j) std::swap(i, j);
    if (seen.insert({i, j}).second) g.bonds.push_back(Bond{i, j, order});
  };

  for (int r = 0; r < n_residues; ++r) {
    const auto &names = by_name[static_cast<std::size_t>(r)];
    const auto *sidechain = residue_template(residue_names[static_cast<std::size_t>(r)]);
    if (sidechain != nullptr) {
      auto apply = [&](const std::vector<TemplateBond> &bonds) {
        for (const TemplateBond &tb : bonds) {
          auto a = names.find(tb.a);
          auto b = names.find(tb.b);
          if (a != names.end() && b != names.end()) add_bond(a->second, b->second, tb.order);
        }
      };
      apply(kBackboneBonds);
      apply(*sidechain);
    } else {
      // Nonstandard residue: keep the atoms, join close pairs.
      const auto &idx = members[static_cast<std::size_t>(r)];
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b)
          if (distance(g.coords[static_cast<std::size_t>(idx[a])],
                       g.coords[static_cast<std::size_t>(idx[b])]) < kHeuristicBondCutoff)
            add_bond(idx[a], idx[b], BondOrder::kSingle);
    }
  }

  for (int r = 0; r + 1 < n_residues; ++r) {
    auto c = by_name[static_cast<std::size_t>(r)].find("C");
    auto n = by_name[static_cast<std::size_t>(r + 1)].find("N");
    if (c == by_name[static_cast<std::size_t>(r)].end() ||
        n == by_name[static_cast<std::size_t>(r + 1)].end())
      continue;
    if (distance(g.coords[static_cast<std::size_t>(c->second)],
                 g.coords[static_cast<std::size_t>(n->second)]) < kPeptideBondCutoff)
      add_bond(c->second, n->second, BondOrder::kSingle);
  }

  g.validate();
  return g;
}

AtomGraph parse_pdb(const std::string &text) {
  std::istringstream in(text);
  return parse_pdb(in);
}

}  // namespace cpiformer
