//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "cpiformer/errors.hpp"

namespace cpiformer {

double Tensor::item() const {
  if (rows != 1 || cols != 1)
    throw ShapeError("item: tensor is " + shape_string(*this) + ", not 1x1");
  return data[0];
}

std::string shape_string(const Tensor &t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

void adam_step(const std::vector<Parameter *> &params, AdamState &state,
               const AdamConfig &cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (Parameter *p : params) {
    auto [it, inserted] = state.moments.try_emplace(
        p->name, Tensor(p->value.rows, p->value.cols), Tensor(p->value.rows, p->value.cols));
    Tensor &m = it->second.first;
    Tensor &v = it->second.second;
    if (!m.same_shape(p->value))
      throw ShapeError("adam_step: moment shape " + shape_string(m) +
                       " does not match parameter " + p->name + " " +
                       shape_string(p->value));
    for (std::size_t k = 0; k < p->value.data.size(); ++k) {
      const double g = p->grad.data[k];
      m.data[k] = cfg.beta1 * m.data[k] + (1.0 - cfg.beta1) * g;
      v.data[k] = cfg.beta2 * v.data[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.data[k] / bc1;
      const double v_hat = v.data[k] / bc2;
      p->value.data[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

namespace {

constexpr char kMagic[4] = {'C', 'P', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream &out, T v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream &in) {
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string &path,
                     const std::vector<const Parameter *> &params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(params.size()));
  for (const Parameter *p : params) {
    write_pod(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_pod(out, static_cast<std::uint32_t>(p->value.rows));
    write_pod(out, static_cast<std::uint32_t>(p->value.cols));
    out.write(reinterpret_cast<const char *>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write on checkpoint " + path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw CheckpointError("not a checkpoint file: " + path);
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw CheckpointError("unsupported checkpoint version in " + path);

  const auto count = read_pod<std::uint64_t>(in);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw CheckpointError("checkpoint truncated");
    const auto rows = read_pod<std::uint32_t>(in);
    const auto cols = read_pod<std::uint32_t>(in);
    Tensor t(static_cast<int>(rows), static_cast<int>(cols));
    in.read(reinterpret_cast<char *>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw CheckpointError("checkpoint truncated");
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void load_checkpoint(const std::string &path, const std::vector<Parameter *> &params) {
  std::map<std::string, Tensor> stored;
  for (auto &[name, t] : read_checkpoint(path))
    if (!stored.emplace(name, std::move(t)).second)
      throw CheckpointError("duplicate parameter in checkpoint: " + name);

  std::set<std::string> wanted;
  for (Parameter *p : params)
    if (!wanted.insert(p->name).second)
      throw CheckpointError("duplicate parameter name in model: " + p->name);
  if (wanted.size() != stored.size())
    throw CheckpointError("checkpoint holds " + std::to_string(stored.size()) +
                          " parameters, model expects " + std::to_string(wanted.size()));

  for (Parameter *p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end())
      throw CheckpointError("checkpoint is missing parameter " + p->name);
    if (!it->second.same_shape(p->value))
      throw CheckpointError("parameter " + p->name + " has shape " +
                            shape_string(it->second) + " in checkpoint, expected " +
                            shape_string(p->value));
    bool req = p->value.requires_grad;
    p->value = std::move(it->second);
    p->value.requires_grad = req;
  }
}

}  // namespace cpiformer
