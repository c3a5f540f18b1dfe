//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//
// The command-line surface. Every number written to a CSV or to stdout is
// formatted with %.17g so identical runs produce byte-identical files.
// Logging goes to stderr; stdout carries data only.

#include "cpiformer/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "cpiformer/atom_graph.hpp"
#include "cpiformer/config.hpp"
#include "cpiformer/dataset.hpp"
#include "cpiformer/encoder.hpp"
#include "cpiformer/errors.hpp"
#include "cpiformer/motif.hpp"
#include "cpiformer/pdb.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/sdf.hpp"
#include "cpiformer/synth.hpp"
#include "cpiformer/tensor.hpp"
#include "cpiformer/training.hpp"

namespace cpiformer {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

AtomGraph read_compound(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read compound file " + path);
  return parse_sdf(in);
}

AtomGraph read_protein(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read protein file " + path);
  return parse_pdb(in);
}

// ---------------------------------------------------------------------------
// Self-describing checkpoints. The architecture rides along as a synthetic
// 1x7 entry so evaluate/predict need nothing beyond the checkpoint itself.
// ---------------------------------------------------------------------------

constexpr const char *kMetaName = "meta.model";

Tensor meta_tensor(const ModelConfig &m) {
  Tensor t(1, 7);
  t.at(0, 0) = m.layers;
  t.at(0, 1) = m.heads;
  t.at(0, 2) = m.d_model;
  t.at(0, 3) = m.kernels;
  t.at(0, 4) = m.mu_max;
  t.at(0, 5) = m.sigma_scale;
  t.at(0, 6) = m.prior_enabled ? 1.0 : 0.0;
  return t;
}

ModelConfig meta_config(const Tensor &t) {
  if (t.rows != 1 || t.cols != 7)
    throw CheckpointError("model description entry has shape " + shape_string(t) +
                          ", expected 1x7");
  ModelConfig m;
  m.layers = static_cast<int>(t.at(0, 0));
  m.heads = static_cast<int>(t.at(0, 1));
  m.d_model = static_cast<int>(t.at(0, 2));
  m.kernels = static_cast<int>(t.at(0, 3));
  m.mu_max = t.at(0, 4);
  m.sigma_scale = t.at(0, 5);
  m.prior_enabled = t.at(0, 6) != 0.0;
  m.validate();
  return m;
}

void save_model(Model &model, const std::string &path) {
  Parameter meta(kMetaName, meta_tensor(model.config));
  std::vector<const Parameter *> params;
  for (Parameter *p : model.parameters()) params.push_back(p);
  params.push_back(&meta);
  save_checkpoint(path, params);
}

Model load_model(const std::string &path) {
  ModelConfig cfg;
  bool found = false;
  for (const auto &[name, tensor] : read_checkpoint(path)) {
    if (name != kMetaName) continue;
    cfg = meta_config(tensor);
    found = true;
    break;
  }
  if (!found)
    throw CheckpointError("checkpoint " + path + " has no model description entry");

  Rng rng(0);  // every weight is overwritten by the load below
  Model model(cfg, rng);
  Parameter meta(kMetaName, Tensor(1, 7));
  std::vector<Parameter *> params = model.parameters();
  params.push_back(&meta);
  load_checkpoint(path, params);
  return model;
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

void require_labels(const std::vector<ManifestEntry> &entries, const std::string &manifest) {
  for (const ManifestEntry &e : entries)
    if (!e.affinity.has_value())
      throw ConfigError("manifest row \"" + e.id + "\" in " + manifest +
                        " has no affinity label");
}

std::vector<Complex> load_usable(const std::vector<ManifestEntry> &entries,
                                 bool require_affinity, const std::string &manifest) {
  ComplexSet set = load_complexes(entries, require_affinity);
  for (const SkippedEntry &s : set.skipped)
    std::cerr << "skip " << s.id << ": " << s.reason << "\n";
  std::cerr << "loaded " << set.complexes.size() << " of " << entries.size()
            << " complexes from " << manifest << " (" << set.skipped.size()
            << " skipped)\n";
  if (set.complexes.empty())
    throw ConfigError("no usable complexes in " + manifest);
  return std::move(set.complexes);
}

void echo_config(const RunConfig &cfg, const std::string &name) {
  std::filesystem::create_directories(cfg.report_dir);
  const std::string path = (std::filesystem::path(cfg.report_dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << config_to_json(cfg);
}

std::ofstream open_csv(const std::string &dir, const std::string &name,
                       const std::string &header) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << header << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

int count_cut_bonds(const AtomGraph &g, const MotifGraph &mg) {
  int cut = 0;
  for (const Bond &b : g.bonds)
    if (mg.parent[static_cast<std::size_t>(b.i)] != mg.parent[static_cast<std::size_t>(b.j)])
      ++cut;
  return cut;
}

std::map<int, int> size_histogram(const MotifGraph &mg) {
  std::map<int, int> hist;
  for (const auto &members : mg.motifs) ++hist[static_cast<int>(members.size())];
  return hist;
}

void print_summary(const std::string &label, const MotifGraph &mg, int cut) {
  const int n = mg.size();
  std::cout << label << ": " << n << " motif" << (n == 1 ? "" : "s") << ", " << cut
            << " cut bond" << (cut == 1 ? "" : "s") << "\n";
  for (const auto &[size, count] : size_histogram(mg))
    std::cout << "  motifs of size " << size << ": " << count << "\n";
}

int cmd_decompose(const std::string &compound_path, const std::string &protein_path,
                  const std::string &out_path) {
  const AtomGraph compound = read_compound(compound_path);
  const AtomGraph protein = read_protein(protein_path);
  const MotifGraph mc = decompose_compound(compound);
  const MotifGraph mp = decompose_protein(protein);
  const int cut_c = count_cut_bonds(compound, mc);
  const int cut_p = count_cut_bonds(protein, mp);

  nlohmann::json j;
  j["compound"] = mc;
  j["compound"]["cut_bonds"] = cut_c;
  j["protein"] = mp;
  j["protein"]["cut_bonds"] = cut_p;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path);
  out << j.dump(2) << "\n";

  print_summary("compound", mc, cut_c);
  print_summary("protein", mp, cut_p);
  return 0;
}

// ---------------------------------------------------------------------------
// pretrain
// ---------------------------------------------------------------------------

int cmd_pretrain(const std::string &config_path) {
  const RunConfig cfg = load_run_config(config_path);
  if (cfg.manifest.empty()) throw ConfigError("paths.manifest is required");
  const std::vector<ManifestEntry> entries = load_manifest(cfg.manifest);
  const std::vector<Complex> pool = load_usable(entries, false, cfg.manifest);
  echo_config(cfg, "pretrain-config.json");
  std::filesystem::create_directories(cfg.checkpoint_dir);

  Rng init_rng = Rng(cfg.seed).fork(1);
  Model model(cfg.model, init_rng);
  Rng batch_rng = Rng(cfg.seed).fork(2);
  Rng pose_rng = Rng(cfg.seed).fork(3);

  PretrainConfig pcfg;
  pcfg.loss = cfg.loss;
  pcfg.adam = cfg.optim;
  pcfg.w_atom = cfg.w_atom;
  pcfg.w_motif = cfg.w_motif;
  pcfg.w_cond = cfg.w_cond;

  std::ofstream csv = open_csv(cfg.report_dir, "pretrain-loss.csv",
                               "step,l_atom,l_motif,l_cond,total");
  AdamState state;
  const int n = static_cast<int>(pool.size());
  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<Complex> sampled;
    if (cfg.batch_size < n) {
      sampled.reserve(static_cast<std::size_t>(cfg.batch_size));
      for (int k = 0; k < cfg.batch_size; ++k)
        sampled.push_back(pool[static_cast<std::size_t>(
            batch_rng.below(static_cast<std::uint64_t>(n)))]);
    }
    const std::vector<Complex> &batch = cfg.batch_size < n ? sampled : pool;
    const LossBundle pre = pretrain_step(model, batch, state, pcfg, pose_rng);
    csv << step << ',' << fmt17(pre.atom) << ',' << fmt17(pre.motif) << ','
        << fmt17(pre.conditioned) << ',' << fmt17(pre.total) << "\n";
    if (step % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "step-%06d.ckpt", step);
      save_model(model, (std::filesystem::path(cfg.checkpoint_dir) / name).string());
      std::cerr << "step " << step << " loss " << fmt17(pre.total) << "\n";
    }
  }
  const std::string final_path =
      (std::filesystem::path(cfg.checkpoint_dir) / "pretrained.ckpt").string();
  save_model(model, final_path);
  std::cerr << "wrote " << final_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// finetune
// ---------------------------------------------------------------------------

int cmd_finetune(const std::string &config_path, const std::string &init_override) {
  RunConfig cfg = load_run_config(config_path);
  if (!init_override.empty()) {
    cfg.init = init_override == "scratch"
                   ? init_override
                   : std::filesystem::absolute(init_override).lexically_normal().string();
  }
  if (cfg.manifest.empty()) throw ConfigError("paths.manifest is required");

  const std::vector<ManifestEntry> entries = load_manifest(cfg.manifest);
  require_labels(entries, cfg.manifest);  // fail before any training
  const std::vector<Complex> train = load_usable(entries, true, cfg.manifest);
  std::vector<Complex> val_store;
  if (!cfg.val_manifest.empty()) {
    const std::vector<ManifestEntry> ventries = load_manifest(cfg.val_manifest);
    require_labels(ventries, cfg.val_manifest);
    val_store = load_usable(ventries, true, cfg.val_manifest);
  }
  const std::vector<Complex> &val = cfg.val_manifest.empty() ? train : val_store;

  echo_config(cfg, "finetune-config.json");
  std::filesystem::create_directories(cfg.checkpoint_dir);

  Model model = [&] {
    if (cfg.init == "scratch") {
      Rng init_rng = Rng(cfg.seed).fork(1);
      return Model(cfg.model, init_rng);
    }
    Model loaded = load_model(cfg.init);
    if (!(loaded.config == cfg.model))
      std::cerr << "note: architecture comes from the checkpoint, not the config\n";
    return loaded;
  }();

  std::vector<PreparedComplex> train_prep, val_prep;
  std::vector<double> train_labels, val_labels;
  for (const Complex &c : train) {
    train_prep.push_back(prepare_full(c));
    train_labels.push_back(*c.affinity);
  }
  for (const Complex &c : val) {
    val_prep.push_back(prepare_full(c));
    val_labels.push_back(*c.affinity);
  }

  std::ofstream csv = open_csv(cfg.report_dir, "finetune-metrics.csv",
                               "epoch,train_mse,val_rmse,val_pearson");
  Rng order_rng = Rng(cfg.seed).fork(4);
  AdamState state;
  const int n = static_cast<int>(train_prep.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int k = static_cast<int>(order_rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
    }
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      std::vector<PreparedComplex> batch;
      batch.reserve(static_cast<std::size_t>(stop - start));
      for (int k = start; k < stop; ++k)
        batch.push_back(train_prep[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
      finetune_step(model, batch, state, cfg.optim);
    }

    std::vector<double> train_pred, val_pred;
    for (PreparedComplex &p : train_prep) train_pred.push_back(predict_affinity_value(model, p));
    for (PreparedComplex &p : val_prep) val_pred.push_back(predict_affinity_value(model, p));
    const double train_mse = affinity_mse(train_pred, train_labels);
    const double val_rmse = metric_rmse(val_pred, val_labels);
    const std::optional<double> val_pearson = metric_pearson(val_pred, val_labels);
    csv << epoch << ',' << fmt17(train_mse) << ',' << fmt17(val_rmse) << ','
        << (val_pearson ? fmt17(*val_pearson) : std::string("undefined")) << "\n";
    if (epoch % 50 == 0 || epoch == cfg.epochs)
      std::cerr << "epoch " << epoch << " train_mse " << fmt17(train_mse) << "\n";
  }

  const std::string final_path =
      (std::filesystem::path(cfg.checkpoint_dir) / "finetuned.ckpt").string();
  save_model(model, final_path);
  std::cerr << "wrote " << final_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string &checkpoint, const std::string &manifest,
                 const std::string &out_path) {
  Model model = load_model(checkpoint);
  const std::vector<ManifestEntry> entries = load_manifest(manifest);
  require_labels(entries, manifest);
  const std::vector<Complex> pool = load_usable(entries, true, manifest);

  std::vector<double> preds, labels;
  for (const Complex &c : pool) {
    PreparedComplex prep = prepare_full(c);
    preds.push_back(predict_affinity_value(model, prep));
    labels.push_back(*c.affinity);
  }

  nlohmann::ordered_json j;
  j["rmse"] = metric_rmse(preds, labels);
  const std::optional<double> pearson = metric_pearson(preds, labels);
  if (pearson)
    j["pearson"] = *pearson;
  else
    j["pearson"] = "undefined";
  j["n"] = static_cast<int>(preds.size());

  const std::string text = j.dump() + "\n";
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << text;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

void dump_level(const EncoderWeights &enc, const DistanceHead &head,
                const LevelInputs &inputs, int m, int n, const std::string &path) {
  const Tensor h = encode_forward(enc, inputs, MaskPolicy::kFull);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  std::vector<double> hi(static_cast<std::size_t>(h.cols));
  std::vector<double> hj(static_cast<std::size_t>(h.cols));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int c = 0; c < h.cols; ++c) {
        hi[static_cast<std::size_t>(c)] = h.at(i, c);
        hj[static_cast<std::size_t>(c)] = h.at(m + j, c);
      }
      if (j) out << ',';
      out << fmt17(predict_distance(head, hi, hj));
    }
    out << "\n";
  }
}

int cmd_predict(const std::string &checkpoint, const std::string &compound_path,
                const std::string &protein_path, const std::string &dump_prefix) {
  Model model = load_model(checkpoint);
  const AtomGraph compound = read_compound(compound_path);
  const AtomGraph protein = read_protein(protein_path);
  ComplexValidation v = validate_complex(compound, protein, "cli", {});
  if (!v.accepted())
    throw ConfigError("compound and protein are not in contact: closest pair " +
                      fmt17(v.min_distance) + " A exceeds " + fmt17(kComplexDistanceCutoff) +
                      " A");
  PreparedComplex prep = prepare_full(*v.complex);
  std::cout << fmt17(predict_affinity_value(model, prep)) << "\n";

  if (!dump_prefix.empty()) {
    dump_level(model.atom_encoder, model.atom_head, prep.atom_inputs, prep.atoms_m,
               prep.atoms_n, dump_prefix + "-atom.csv");
    dump_level(model.motif_encoder, model.motif_head, prep.motif_inputs, prep.motifs_m,
               prep.motifs_n, dump_prefix + "-motif.csv");
    std::cerr << "wrote " << dump_prefix << "-atom.csv and " << dump_prefix
              << "-motif.csv\n";
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Argument surface.
// ---------------------------------------------------------------------------

int run_cli(int argc, const char *const *argv) {
  CLI::App app{"compound-protein interaction model pipeline"};
  app.require_subcommand(1);

  std::string config_path, init_override, checkpoint, manifest, out_path;
  std::string compound_path, protein_path, dump_prefix, out_dir;
  int count = 4;
  std::uint64_t seed = 0;

  CLI::App *dec = app.add_subcommand("decompose", "Break a complex into motif graphs");
  dec->add_option("--compound", compound_path, "compound SDF file")->required();
  dec->add_option("--protein", protein_path, "protein PDB file")->required();
  dec->add_option("--out", out_path, "output JSON path")->required();

  CLI::App *pre = app.add_subcommand("pretrain", "Masked cross-distance pre-training");
  pre->add_option("--config", config_path, "run configuration file")->required();

  CLI::App *fin = app.add_subcommand("finetune", "Binding affinity fine-tuning");
  fin->add_option("--config", config_path, "run configuration file")->required();
  fin->add_option("--init", init_override,
                  "checkpoint path or \"scratch\" (overrides finetune.init)");

  CLI::App *ev = app.add_subcommand("evaluate", "Report affinity metrics on a manifest");
  ev->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ev->add_option("--manifest", manifest, "labeled manifest")->required();
  ev->add_option("--out", out_path, "also write the metrics JSON here");

  CLI::App *prd = app.add_subcommand("predict", "Predict affinity for one complex");
  prd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  prd->add_option("--compound", compound_path, "compound SDF file")->required();
  prd->add_option("--protein", protein_path, "protein PDB file")->required();
  prd->add_option("--dump-distances", dump_prefix,
                  "prefix for atom- and motif-level predicted distance CSVs");

  CLI::App *syn = app.add_subcommand("synth", "Generate a synthetic dataset");
  syn->group("");  // internal utility, hidden from help
  syn->add_option("--out", out_dir, "output directory")->required();
  syn->add_option("--count", count, "number of complexes");
  syn->add_option("--seed", seed, "generator seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (dec->parsed()) return cmd_decompose(compound_path, protein_path, out_path);
    if (pre->parsed()) return cmd_pretrain(config_path);
    if (fin->parsed()) return cmd_finetune(config_path, init_override);
    if (ev->parsed()) return cmd_evaluate(checkpoint, manifest, out_path);
    if (prd->parsed()) return cmd_predict(checkpoint, compound_path, protein_path, dump_prefix);
    if (syn->parsed()) {
      std::cout << write_synthetic_set(out_dir, count, seed) << "\n";
      return 0;
    }
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CheckpointError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cpiformer
