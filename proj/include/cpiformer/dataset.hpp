//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_DATASET_HPP_
#define CPIFORMER_DATASET_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpiformer/atom_graph.hpp"

namespace cpiformer {

/// One manifest row: a compound/protein file pair with an optional label.
struct ManifestEntry {
  std::string id;
  std::string compound_path;
  std::string protein_path;
  std::optional<double> affinity;
};

/// Parses JSON-lines text: one object per nonempty line with string keys
/// id, compound_path, protein_path and an optional numeric affinity (null
/// counts as absent). Unknown keys raise ParseError with the line number.
std::vector<ManifestEntry> parse_manifest(const std::string &text);

/// Reads and parses a manifest file. Relative molecule paths are resolved
/// against the manifest's directory so a dataset moves as one unit.
std::vector<ManifestEntry> load_manifest(const std::string &path);

/// One JSON object per line, key order fixed; affinity omitted when absent.
void write_manifest(std::ostream &out, const std::vector<ManifestEntry> &entries);

struct SkippedEntry {
  std::string id;
  std::string reason;
};

struct ComplexSet {
  std::vector<Complex> complexes;
  std::vector<SkippedEntry> skipped;
};

/// Loads every entry's molecule pair. Entries whose files are missing, fail
/// to parse, or fail complex validation are skipped with a reason instead of
/// aborting the run. With require_affinity, unlabeled rows are also skipped.
ComplexSet load_complexes(const std::vector<ManifestEntry> &entries,
                          bool require_affinity);

}  // namespace cpiformer

#endif  // CPIFORMER_DATASET_HPP_
