//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_PDB_HPP_
#define CPIFORMER_PDB_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "cpiformer/atom_graph.hpp"

namespace cpiformer {

/// Reads fixed-column ATOM records into a heavy-atom graph. PDB files carry
/// no bond block, so bonds are inferred: per-residue templates for the 20
/// standard amino acids, the peptide bond C(i)-N(i+1) when those atoms are
/// closer than 2.0 A, and a 1.9 A distance heuristic inside nonstandard
/// residues. Atom names N/CA/C/O set the backbone flag. Hydrogens, HETATM
/// records and non-primary altLoc conformers are skipped.
AtomGraph parse_pdb(std::istream &in);
AtomGraph parse_pdb(const std::string &text);

/// Sidechain bond template for a standard residue name, as atom-name pairs
/// with bond orders. Empty for unknown names. Exposed for the protein motif
/// rules and the synthetic generator.
struct TemplateBond {
  const char *a;
  const char *b;
  BondOrder order;
};
const std::vector<TemplateBond> *residue_template(const std::string &res_name);

}  // namespace cpiformer

#endif  // CPIFORMER_PDB_HPP_
