//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_SYNTH_HPP_
#define CPIFORMER_SYNTH_HPP_

#include <cstdint>
#include <string>

#include "cpiformer/atom_graph.hpp"
#include "cpiformer/rng.hpp"

namespace cpiformer {

/// Size and contact-gap bounds for generated complexes.
struct SynthConfig {
  int min_compound_atoms = 5;
  int max_compound_atoms = 20;
  int min_protein_atoms = 20;
  int max_protein_atoms = 60;
  double min_gap = 3.0;  // closest cross contact lands in (min_gap, max_gap)
  double max_gap = 5.5;
};

/// Random heavy-atom molecule: a spatially grown bond tree over weighted
/// elements, occasional double bonds, and ring-closing extra bonds on larger
/// molecules.
AtomGraph synth_compound(Rng &rng, const SynthConfig &cfg = {});

/// Random peptide chain assembled from idealized residue templates. The
/// graph is produced by round-tripping fixed-column ATOM records through the
/// PDB parser, so the in-memory protein and its file form are identical; the
/// text is returned through pdb_text when requested. Atom names follow the
/// standard-residue bond tables, which is what gives the parsed graph its
/// bonds.
AtomGraph synth_protein(Rng &rng, const SynthConfig &cfg = {},
                        std::string *pdb_text = nullptr);

/// Deterministic pseudo-label in pKa-like units from structure summary
/// statistics (sizes and the closest cross contact).
double synthetic_affinity(const Complex &c);

/// One labeled complex: the compound is slid toward the protein along a
/// random direction until the closest cross contact falls inside the gap
/// band, which keeps every generated pair within the 6 A contact filter.
/// pdb_text, when given, receives the protein's ATOM records.
Complex generate_complex(const std::string &id, Rng &rng, const SynthConfig &cfg = {},
                         std::string *pdb_text = nullptr);

/// Writes count complexes as SDF/PDB file pairs plus manifest.jsonl with
/// relative paths into dir (created if missing). Returns the manifest path.
std::string write_synthetic_set(const std::string &dir, int count, std::uint64_t seed,
                                const SynthConfig &cfg = {});

}  // namespace cpiformer

#endif  // CPIFORMER_SYNTH_HPP_
