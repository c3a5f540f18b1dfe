//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_CONFIG_HPP_
#define CPIFORMER_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "cpiformer/encoder.hpp"
#include "cpiformer/training.hpp"

namespace cpiformer {

/// Resolved run settings. Every field except the paths has a default;
/// train.seed must always be given explicitly so runs are reproducible on
/// purpose rather than by accident.
struct RunConfig {
  ModelConfig model;   // model.layers/heads/d_model/kernels/prior_enabled,
                       // spe.mu_max/sigma_scale
  LossConfig loss;     // loss.d_max/clip
  double w_atom = 1.0;  // loss.w_atom
  double w_motif = 1.0;  // loss.w_motif
  double w_cond = 1.0;   // loss.w_cond
  AdamConfig optim;      // optim.lr/beta1/beta2
  int steps = 500;       // optim.steps
  int batch_size = 4;    // optim.batch_size
  std::uint64_t seed = 0;     // train.seed (mandatory)
  int checkpoint_every = 100;  // train.checkpoint_every
  int epochs = 50;             // finetune.epochs
  std::string init = "scratch";  // finetune.init: "scratch" or a checkpoint path
  std::string manifest;          // paths.manifest
  std::string val_manifest;      // paths.val_manifest (optional)
  std::string checkpoint_dir = ".";  // paths.checkpoint_dir
  std::string report_dir = ".";      // paths.report_dir

  /// Throws ConfigError on out-of-range numeric fields.
  void validate() const;

  bool operator==(const RunConfig &) const = default;
};

/// Parses either format by sniffing the first non-space character: '{'
/// selects JSON with one nested object per section, anything else the flat
/// key=value form ('#' starts a comment). Unknown or duplicate keys and a
/// missing train.seed raise ConfigError.
RunConfig parse_run_config(const std::string &text);

/// Reads and parses a config file; relative entries under paths.* are
/// resolved against the config file's directory.
RunConfig load_run_config(const std::string &path);

/// Resolved-config echo: JSON with every field spelled out, stable key
/// order. parse_run_config(config_to_json(c)) reproduces c.
std::string config_to_json(const RunConfig &cfg);

}  // namespace cpiformer

#endif  // CPIFORMER_CONFIG_HPP_
