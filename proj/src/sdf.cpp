//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/sdf.hpp"

#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Fixed-width integer field; SDF counts and bond blocks are column-oriented
// but real files sometimes drift, so fall back to whitespace tolerance within
// the field.
int parse_int_field(const std::string &line, std::size_t pos, std::size_t len,
                    int line_no, const char *what) {
  if (line.size() < pos) throw ParseError(std::string("missing ") + what, line_no);
  std::string field = trim(line.substr(pos, len));
  if (field.empty()) throw ParseError(std::string("empty ") + what, line_no);
  try {
    std::size_t used = 0;
    int v = std::stoi(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception &) {
    throw ParseError(std::string("bad ") + what + " \"" + field + "\"", line_no);
  }
}

double parse_double_field(const std::string &line, std::size_t pos,
                          std::size_t len, int line_no, const char *what) {
  if (line.size() < pos) throw ParseError(std::string("missing ") + what, line_no);
  std::string field = trim(line.substr(pos, std::min(len, line.size() - pos)));
  if (field.empty()) throw ParseError(std::string("empty ") + what, line_no);
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception &) {
    throw ParseError(std::string("bad ") + what + " \"" + field + "\"", line_no);
  }
}

std::string normalize_element(std::string s) {
  s = trim(s);
  if (s.empty()) return s;
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  for (std::size_t i = 1; i < s.size(); ++i)
    s[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  return s;
}

}  // namespace

AtomGraph parse_sdf(std::istream &in) {
  int line_no = 0;
  std::string line;
  auto next_line = [&](const char *what) {
    if (!std::getline(in, line)) throw ParseError(std::string("unexpected end of record before ") + what, line_no);
    ++line_no;
    return line;
  };

  next_line("title line");
  next_line("program line");
  next_line("comment line");

  next_line("counts line");
  if (line.size() < 6) throw ParseError("malformed counts line", line_no);
  const int n_atoms = parse_int_field(line, 0, 3, line_no, "atom count");
  const int n_bonds = parse_int_field(line, 3, 3, line_no, "bond count");
  if (n_atoms < 0 || n_bonds < 0) throw ParseError("malformed counts line", line_no);

  struct RawAtom {
    Vec3 pos;
    std::string element;
  };
  std::vector<RawAtom> raw;
  raw.reserve(static_cast<std::size_t>(n_atoms));
  for (int i = 0; i < n_atoms; ++i) {
    next_line("atom block line");
    RawAtom a;
    a.pos.x = parse_double_field(line, 0, 10, line_no, "x coordinate");
    a.pos.y = parse_double_field(line, 10, 10, line_no, "y coordinate");
    a.pos.z = parse_double_field(line, 20, 10, line_no, "z coordinate");
    if (line.size() < 32) throw ParseError("missing element symbol", line_no);
    a.element = normalize_element(line.substr(31, 3));
    if (a.element.empty()) throw ParseError("missing element symbol", line_no);
    raw.push_back(std::move(a));
  }

  // Heavy-atom re-indexing map; -1 marks a dropped hydrogen.
  std::vector<int> remap(raw.size(), -1);
  AtomGraph g;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (is_hydrogen(raw[i].element)) continue;
    remap[i] = g.size();
    g.atoms.push_back(Atom{raw[i].element, {}, {}, {}});
    g.coords.push_back(raw[i].pos);
  }

  for (int b = 0; b < n_bonds; ++b) {
    next_line("bond block line");
    const int ai = parse_int_field(line, 0, 3, line_no, "bond atom index");
    const int aj = parse_int_field(line, 3, 3, line_no, "bond atom index");
    const int code = parse_int_field(line, 6, 3, line_no, "bond type");
    if (ai < 1 || ai > n_atoms || aj < 1 || aj > n_atoms)
      throw ParseError("bond atom index out of range: " + std::to_string(ai) + "-" +
                       std::to_string(aj), line_no);
    BondOrder order;
    switch (code) {
      case 1: order = BondOrder::kSingle; break;
      case 2: order = BondOrder::kDouble; break;
      case 3: order = BondOrder::kTriple; break;
      case 4: order = BondOrder::kAromatic; break;
      default:
        throw ParseError("unknown bond type code " + std::to_string(code), line_no);
    }
    int u = remap[static_cast<std::size_t>(ai - 1)];
    int v = remap[static_cast<std::size_t>(aj - 1)];
    if (u < 0 || v < 0) continue;  // bond to a stripped hydrogen
    if (u > v) std::swap(u, v);
    g.bonds.push_back(Bond{u, v, order});
  }

  // Properties block: recognized but ignored (charges, isotopes, stereo).
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t == "M  END" || t == "M END" || t == "$$$$") break;
  }

  g.validate();
  return g;
}

AtomGraph parse_sdf(const std::string &text) {
  std::istringstream in(text);
  return parse_sdf(in);
}

void write_sdf(std::ostream &out, const AtomGraph &g, const std::string &name) {
  char buf[128];
  out << name << "\n  cpiformer\n\n";
  std::snprintf(buf, sizeof buf, "%3d%3d  0  0  0  0  0  0  0  0999 V2000\n",
                g.size(), static_cast<int>(g.bonds.size()));
  out << buf;
  for (int i = 0; i < g.size(); ++i) {
    std::snprintf(buf, sizeof buf,
                  "%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0\n",
                  g.coords[static_cast<std::size_t>(i)].x,
                  g.coords[static_cast<std::size_t>(i)].y,
                  g.coords[static_cast<std::size_t>(i)].z,
                  g.atoms[static_cast<std::size_t>(i)].element.c_str());
    out << buf;
  }
  for (const Bond &b : g.bonds) {
    int code = 1;
    switch (b.order) {
      case BondOrder::kSingle: code = 1; break;
      case BondOrder::kDouble: code = 2; break;
      case BondOrder::kTriple: code = 3; break;
      case BondOrder::kAromatic: code = 4; break;
    }
    std::snprintf(buf, sizeof buf, "%3d%3d%3d  0\n", b.i + 1, b.j + 1, code);
    out << buf;
  }
  out << "M  END\n$$$$\n";
}

}  // namespace cpiformer
