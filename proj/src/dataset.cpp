//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cpiformer/errors.hpp"
#include "cpiformer/pdb.hpp"
#include "cpiformer/sdf.hpp"

namespace cpiformer {

namespace {

std::string require_string(const nlohmann::json &j, const char *key, int line_no) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string("manifest row missing \"") + key + "\"", line_no);
  if (!it->is_string())
    throw ParseError(std::string("manifest key \"") + key + "\" must be a string",
                     line_no);
  std::string v = it->get<std::string>();
  if (v.empty())
    throw ParseError(std::string("manifest key \"") + key + "\" is empty", line_no);
  return v;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(const std::string &text) {
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(std::string("manifest line is not JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("manifest line is not a JSON object", line_no);

    ManifestEntry entry;
    entry.id = require_string(j, "id", line_no);
    entry.compound_path = require_string(j, "compound_path", line_no);
    entry.protein_path = require_string(j, "protein_path", line_no);
    for (const auto &[key, value] : j.items()) {
      if (key == "id" || key == "compound_path" || key == "protein_path") continue;
      if (key == "affinity") {
        if (value.is_null()) continue;
        if (!value.is_number())
          throw ParseError("manifest key \"affinity\" must be a number or null", line_no);
        entry.affinity = value.get<double>();
        continue;
      }
      throw ParseError("unknown manifest key \"" + key + "\"", line_no);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  std::vector<ManifestEntry> entries = parse_manifest(buf.str());
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string &p) {
    std::filesystem::path fp(p);
    if (fp.is_relative()) p = (base / fp).lexically_normal().string();
  };
  for (ManifestEntry &e : entries) {
    resolve(e.compound_path);
    resolve(e.protein_path);
  }
  return entries;
}

void write_manifest(std::ostream &out, const std::vector<ManifestEntry> &entries) {
  for (const ManifestEntry &e : entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["compound_path"] = e.compound_path;
    j["protein_path"] = e.protein_path;
    if (e.affinity) j["affinity"] = *e.affinity;
    out << j.dump() << "\n";
  }
}

ComplexSet load_complexes(const std::vector<ManifestEntry> &entries,
                          bool require_affinity) {
  ComplexSet set;
  for (const ManifestEntry &e : entries) {
    if (require_affinity && !e.affinity) {
      set.skipped.push_back({e.id, "no affinity label"});
      continue;
    }
    AtomGraph compound, protein;
    try {
      std::ifstream cin_(e.compound_path);
      if (!cin_) throw IoError("cannot read " + e.compound_path);
      compound = parse_sdf(cin_);
      std::ifstream pin(e.protein_path);
      if (!pin) throw IoError("cannot read " + e.protein_path);
      protein = parse_pdb(pin);
    } catch (const std::exception &ex) {
      set.skipped.push_back({e.id, ex.what()});
      continue;
    }
    ComplexValidation v = validate_complex(compound, protein, e.id, e.affinity);
    if (!v.accepted()) {
      set.skipped.push_back(
          {e.id, "closest cross contact " + std::to_string(v.min_distance) +
                     " A exceeds " + std::to_string(kComplexDistanceCutoff) + " A"});
      continue;
    }
    set.complexes.push_back(std::move(*v.complex));
  }
  return set;
}

}  // namespace cpiformer
