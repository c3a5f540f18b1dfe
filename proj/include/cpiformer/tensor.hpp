//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_TENSOR_HPP_
#define CPIFORMER_TENSOR_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cpiformer/rng.hpp"

namespace cpiformer {

/// Dense 2-D row-major matrix of doubles. Scalars are 1x1, vectors 1xN or
/// Nx1. Everything runs in 64-bit; there is no 32-bit compute path.
struct Tensor {
  int rows = 0;
  int cols = 0;
  bool requires_grad = false;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    for (double &x : t.data) x = v;
    return t;
  }
  static Tensor ones(int r, int c) { return full(r, c, 1.0); }
  static Tensor scalar(double v) { return full(1, 1, v); }
  static Tensor row(const std::vector<double> &v) {
    Tensor t(1, static_cast<int>(v.size()));
    t.data = v;
    return t;
  }
  static Tensor column(const std::vector<double> &v) {
    Tensor t(static_cast<int>(v.size()), 1);
    t.data = v;
    return t;
  }

  int size() const { return rows * cols; }
  bool same_shape(const Tensor &o) const { return rows == o.rows && cols == o.cols; }

  double &at(int r, int c) {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c)];
  }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c)];
  }
  double item() const;  // requires 1x1

  /// In-place uniform fill in [lo, hi), row-major draw order.
  void fill_uniform(Rng &rng, double lo, double hi) {
    for (double &x : data) x = rng.uniform(lo, hi);
  }
};

std::string shape_string(const Tensor &t);

/// A named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {
    value.requires_grad = true;
  }
  Parameter(std::string n, Tensor initial)
      : name(std::move(n)), value(std::move(initial)), grad(value.rows, value.cols) {
    value.requires_grad = true;
  }

  void zero_grad() {
    for (double &g : grad.data) g = 0.0;
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig &) const = default;
};

/// First/second moment estimates keyed by parameter name, plus the shared
/// step counter used for bias correction.
struct AdamState {
  int step = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments;
};

/// One standard Adam update over params' accumulated gradients. Does not
/// zero the gradients; callers do that when starting the next accumulation.
void adam_step(const std::vector<Parameter *> &params, AdamState &state,
               const AdamConfig &cfg);

/// Flat binary checkpoint: magic, format version, then name/shape/values per
/// parameter in the given order. Doubles are written in native byte order.
void save_checkpoint(const std::string &path,
                     const std::vector<const Parameter *> &params);

/// Restores values into params. Throws CheckpointError unless the file holds
/// exactly the same parameter names with matching shapes.
void load_checkpoint(const std::string &path, const std::vector<Parameter *> &params);

/// Reads every stored tensor in file order without matching against a model.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string &path);

}  // namespace cpiformer

#endif  // CPIFORMER_TENSOR_HPP_
