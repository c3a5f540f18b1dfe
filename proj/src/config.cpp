//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string &key, const nlohmann::json &j) {
  if (!j.is_number_integer())
    throw ConfigError(key + " must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(key + " is out of range");
  return static_cast<int>(v);
}

std::uint64_t to_seed(const std::string &key, const nlohmann::json &j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ConfigError(key + " must be a nonnegative integer");
}

double to_double(const std::string &key, const nlohmann::json &j) {
  if (!j.is_number()) throw ConfigError(key + " must be a number");
  return j.get<double>();
}

bool to_bool(const std::string &key, const nlohmann::json &j) {
  if (!j.is_boolean()) throw ConfigError(key + " must be true or false");
  return j.get<bool>();
}

std::string to_str(const std::string &key, const nlohmann::json &j) {
  if (!j.is_string()) throw ConfigError(key + " must be a string");
  return j.get<std::string>();
}

void apply(RunConfig &cfg, const std::string &key, const nlohmann::json &v,
           std::set<std::string> &seen) {
  if (!seen.insert(key).second) throw ConfigError("duplicate config key \"" + key + "\"");

  if (key == "model.layers") cfg.model.layers = to_int(key, v);
  else if (key == "model.heads") cfg.model.heads = to_int(key, v);
  else if (key == "model.d_model") cfg.model.d_model = to_int(key, v);
  else if (key == "model.kernels") cfg.model.kernels = to_int(key, v);
  else if (key == "model.prior_enabled") cfg.model.prior_enabled = to_bool(key, v);
  else if (key == "spe.mu_max") cfg.model.mu_max = to_double(key, v);
  else if (key == "spe.sigma_scale") cfg.model.sigma_scale = to_double(key, v);
  else if (key == "loss.d_max") cfg.loss.d_max = to_double(key, v);
  else if (key == "loss.clip") cfg.loss.clip = to_bool(key, v);
  else if (key == "loss.w_atom") cfg.w_atom = to_double(key, v);
  else if (key == "loss.w_motif") cfg.w_motif = to_double(key, v);
  else if (key == "loss.w_cond") cfg.w_cond = to_double(key, v);
  else if (key == "optim.lr") cfg.optim.lr = to_double(key, v);
  else if (key == "optim.beta1") cfg.optim.beta1 = to_double(key, v);
  else if (key == "optim.beta2") cfg.optim.beta2 = to_double(key, v);
  else if (key == "optim.steps") cfg.steps = to_int(key, v);
  else if (key == "optim.batch_size") cfg.batch_size = to_int(key, v);
  else if (key == "train.seed") cfg.seed = to_seed(key, v);
  else if (key == "train.checkpoint_every") cfg.checkpoint_every = to_int(key, v);
  else if (key == "finetune.epochs") cfg.epochs = to_int(key, v);
  else if (key == "finetune.init") cfg.init = to_str(key, v);
  else if (key == "paths.manifest") cfg.manifest = to_str(key, v);
  else if (key == "paths.val_manifest") cfg.val_manifest = to_str(key, v);
  else if (key == "paths.checkpoint_dir") cfg.checkpoint_dir = to_str(key, v);
  else if (key == "paths.report_dir") cfg.report_dir = to_str(key, v);
  else throw ConfigError("unknown config key \"" + key + "\"");
}

// Flat values: quoted text stays a string; bare numbers and booleans parse
// as themselves; everything else is a string (quote values that look
// numeric when a string is meant).
nlohmann::json coerce(const std::string &raw) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return nlohmann::json(raw.substr(1, raw.size() - 2));
  nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
  if (!j.is_discarded() && (j.is_number() || j.is_boolean())) return j;
  return nlohmann::json(raw);
}

void parse_flat(const std::string &text, RunConfig &cfg, std::set<std::string> &seen) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not key=value: \"" + line + "\"");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
    apply(cfg, key, coerce(value), seen);
  }
}

void parse_json(const std::string &text, RunConfig &cfg, std::set<std::string> &seen) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config JSON must be an object of sections");
  for (const auto &[section, body] : doc.items()) {
    if (!body.is_object())
      throw ConfigError("config section \"" + section + "\" must be an object");
    for (const auto &[key, value] : body.items()) {
      if (value.is_object() || value.is_array())
        throw ConfigError("config key \"" + section + "." + key +
                          "\" must be a scalar");
      apply(cfg, section + "." + key, value, seen);
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (!(loss.d_max > 0.0)) throw ConfigError("loss.d_max must be positive");
  if (w_atom < 0.0 || w_motif < 0.0 || w_cond < 0.0)
    throw ConfigError("loss term weights must be nonnegative");
  if (optim.lr < 0.0) throw ConfigError("optim.lr must be nonnegative");
  if (optim.beta1 < 0.0 || optim.beta1 >= 1.0 || optim.beta2 < 0.0 || optim.beta2 >= 1.0)
    throw ConfigError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  if (steps < 0) throw ConfigError("optim.steps must be nonnegative");
  if (batch_size < 1) throw ConfigError("optim.batch_size must be positive");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be positive");
  if (epochs < 0) throw ConfigError("finetune.epochs must be nonnegative");
  if (init.empty()) throw ConfigError("finetune.init must not be empty");
}

RunConfig parse_run_config(const std::string &text) {
  RunConfig cfg;
  std::set<std::string> seen;
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    parse_json(text, cfg, seen);
  else
    parse_flat(text, cfg, seen);
  if (seen.find("train.seed") == seen.end())
    throw ConfigError("train.seed is required");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_run_config(buf.str());

  // Absolute base, so the echoed config works from any directory.
  const std::filesystem::path base =
      std::filesystem::absolute(std::filesystem::path(path)).parent_path();
  auto resolve = [&](std::string &p) {
    if (p.empty()) return;
    std::filesystem::path fp(p);
    if (!fp.is_relative()) return;
    p = (base / fp).lexically_normal().string();
    // "dir/." normalizes to "dir/"; keep directory names slash-free.
    if (p.size() > 1 && p.back() == '/') p.pop_back();
  };
  resolve(cfg.manifest);
  resolve(cfg.val_manifest);
  resolve(cfg.checkpoint_dir);
  resolve(cfg.report_dir);
  if (cfg.init != "scratch") resolve(cfg.init);
  return cfg;
}

std::string config_to_json(const RunConfig &cfg) {
  nlohmann::ordered_json j;
  j["model"] = {{"layers", cfg.model.layers},
                {"heads", cfg.model.heads},
                {"d_model", cfg.model.d_model},
                {"kernels", cfg.model.kernels},
                {"prior_enabled", cfg.model.prior_enabled}};
  j["spe"] = {{"mu_max", cfg.model.mu_max}, {"sigma_scale", cfg.model.sigma_scale}};
  j["loss"] = {{"d_max", cfg.loss.d_max},
               {"clip", cfg.loss.clip},
               {"w_atom", cfg.w_atom},
               {"w_motif", cfg.w_motif},
               {"w_cond", cfg.w_cond}};
  j["optim"] = {{"lr", cfg.optim.lr},
                {"beta1", cfg.optim.beta1},
                {"beta2", cfg.optim.beta2},
                {"steps", cfg.steps},
                {"batch_size", cfg.batch_size}};
  j["train"] = {{"seed", cfg.seed}, {"checkpoint_every", cfg.checkpoint_every}};
  j["finetune"] = {{"epochs", cfg.epochs}, {"init", cfg.init}};
  j["paths"] = {{"manifest", cfg.manifest},
                {"val_manifest", cfg.val_manifest},
                {"checkpoint_dir", cfg.checkpoint_dir},
                {"report_dir", cfg.report_dir}};
  return j.dump(2) + "\n";
}

}  // namespace cpiformer
