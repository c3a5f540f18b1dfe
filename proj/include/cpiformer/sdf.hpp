//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_SDF_HPP_
#define CPIFORMER_SDF_HPP_

#include <iosfwd>
#include <string>

#include "cpiformer/atom_graph.hpp"

namespace cpiformer {

/// Reads one SDF/MOL V2000 record: three header lines, counts line, atom
/// block, bond block, then properties until "M  END" or "$$$$". Hydrogens are
/// dropped and bonds re-indexed over the remaining heavy atoms. Charge,
/// isotope and stereo fields are read past but ignored.
AtomGraph parse_sdf(std::istream &in);
AtomGraph parse_sdf(const std::string &text);

/// Writes a single V2000 record (coordinates at 4 decimals).
void write_sdf(std::ostream &out, const AtomGraph &g,
               const std::string &name = "");

}  // namespace cpiformer

#endif  // CPIFORMER_SDF_HPP_
