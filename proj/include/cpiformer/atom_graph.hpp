//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_ATOM_GRAPH_HPP_
#define CPIFORMER_ATOM_GRAPH_HPP_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpiformer/geometry.hpp"

namespace cpiformer {

enum class BondOrder { kSingle, kDouble, kTriple, kAromatic };

std::string to_string(BondOrder order);
BondOrder bond_order_from_string(const std::string &s);

struct Atom {
  std::string element;
  std::optional<int> residue_id;
  std::optional<std::string> residue_name;
  std::optional<bool> backbone;

  bool operator==(const Atom &) const = default;
};

/// Undirected bond between heavy atoms. Stored with i < j, one entry per
/// unordered pair.
struct Bond {
  int i = 0;
  int j = 0;
  BondOrder order = BondOrder::kSingle;

  bool operator==(const Bond &) const = default;
};

/// One molecule as a heavy-atom graph with 3-D coordinates in angstroms.
/// Hydrogens are stripped at parse time so compound and protein graphs stay
/// comparable (crystallographic protein files usually omit them anyway).
struct AtomGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<Vec3> coords;

  int size() const { return static_cast<int>(atoms.size()); }
  bool empty() const { return atoms.empty(); }

  /// Throws ParseError if any structural invariant is broken: bond index out
  /// of range, self-loop, duplicate pair, bond not normalized to i < j,
  /// coords/atoms length mismatch, non-finite coordinate, or hydrogen atom.
  void validate() const;

  bool operator==(const AtomGraph &) const = default;
};

/// True for hydrogen and its isotopes (H, D, T), any case.
bool is_hydrogen(const std::string &element);

void to_json(nlohmann::json &j, const AtomGraph &g);
void from_json(const nlohmann::json &j, AtomGraph &g);

/// A compound bound to a protein, optionally with a measured affinity (pKa).
struct Complex {
  std::string id;
  AtomGraph compound;
  AtomGraph protein;
  std::optional<double> affinity;
};

/// Exact O(m*n) scan over all cross pairs.
double min_cross_distance(const AtomGraph &compound, const AtomGraph &protein);

constexpr double kComplexDistanceCutoff = 6.0;  // angstroms, inclusive

/// Outcome of the contact filter. `complex` is engaged iff the pair was
/// accepted; `min_distance` is reported either way.
struct ComplexValidation {
  std::optional<Complex> complex;
  double min_distance = 0.0;

  bool accepted() const { return complex.has_value(); }
};

/// Accepts the pair iff the closest cross-molecular heavy-atom contact is
/// within 6.0 A (inclusive). Both graphs must be non-empty.
ComplexValidation validate_complex(const AtomGraph &compound,
                                   const AtomGraph &protein,
                                   std::string id = "",
                                   std::optional<double> affinity = {});

}  // namespace cpiformer

#endif  // CPIFORMER_ATOM_GRAPH_HPP_
