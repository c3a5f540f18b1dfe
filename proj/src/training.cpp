//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/training.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kTranslationRadius = 10.0;  // angstroms

std::vector<Vec3> member_means(const AtomGraph &g, const MotifGraph &mg) {
  std::vector<Vec3> out(mg.size());
  for (int r = 0; r < mg.size(); ++r) {
    Vec3 sum;
    for (int a : mg.motifs[r]) sum = sum + g.coords[a];
    out[r] = sum * (1.0 / static_cast<double>(mg.motifs[r].size()));
  }
  return out;
}

std::vector<std::pair<int, int>> cross_pairs(int m, int n) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) pairs.emplace_back(i, m + j);
  return pairs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rigid motions.
// ---------------------------------------------------------------------------

Vec3 RigidTransform::apply(const Vec3 &v) const {
  return {rot[0] * v.x + rot[1] * v.y + rot[2] * v.z + translation.x,
          rot[3] * v.x + rot[4] * v.y + rot[5] * v.z + translation.y,
          rot[6] * v.x + rot[7] * v.y + rot[8] * v.z + translation.z};
}

void RigidTransform::validate() const {
  const auto &r = rot;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(dot - want) > 1e-10)
        throw NumericError("rigid transform: matrix is not orthonormal");
    }
  const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) -
                     r[1] * (r[3] * r[8] - r[5] * r[6]) +
                     r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (std::abs(det - 1.0) > 1e-10)
    throw NumericError("rigid transform: determinant is not +1");
}

RigidTransform sample_rigid_transform(Rng &rng) {
  // Uniform unit quaternion from three uniforms, then the standard
  // quaternion-to-matrix map.
  const double u1 = rng.uniform(0.0, 1.0);
  const double u2 = rng.uniform(0.0, 1.0);
  const double u3 = rng.uniform(0.0, 1.0);
  const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
  const double a1 = kTwoPi * u2, a2 = kTwoPi * u3;
  const double x = s1 * std::sin(a1);
  const double y = s1 * std::cos(a1);
  const double z = s2 * std::sin(a2);
  const double w = s2 * std::cos(a2);

  RigidTransform t;
  t.rot = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
           2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
           2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};

  // Uniform point in the ball: cube-root radius against a uniform direction.
  const double radius = kTranslationRadius * std::cbrt(rng.uniform(0.0, 1.0));
  const double cos_t = rng.uniform(-1.0, 1.0);
  const double phi = kTwoPi * rng.uniform(0.0, 1.0);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  t.translation = {radius * sin_t * std::cos(phi), radius * sin_t * std::sin(phi),
                   radius * cos_t};
  return t;
}

AtomGraph apply_transform(const AtomGraph &g, const RigidTransform &t) {
  AtomGraph out = g;
  for (Vec3 &v : out.coords) v = t.apply(v);
  return out;
}

Complex perturb_compound(const Complex &c, const RigidTransform &t) {
  Complex out = c;
  out.compound = apply_transform(c.compound, t);
  return out;
}

// ---------------------------------------------------------------------------
// Prepared batches.
// ---------------------------------------------------------------------------

namespace {

PreparedComplex prepare(const Complex &reference, const AtomGraph &posed_compound,
                        bool keep_cross) {
  if (posed_compound.size() != reference.compound.size())
    throw ShapeError("prepare: posed compound does not match the reference");
  PreparedComplex prep;
  prep.id = reference.id;
  prep.affinity = reference.affinity;

  const MotifGraph mc = decompose_compound(reference.compound);
  const MotifGraph mp = decompose_protein(reference.protein);
  const std::vector<Vec3> cent_c = member_means(reference.compound, mc);
  const std::vector<Vec3> cent_p = member_means(reference.protein, mp);

  prep.atoms_m = reference.compound.size();
  prep.atoms_n = reference.protein.size();
  prep.motifs_m = mc.size();
  prep.motifs_n = mp.size();

  prep.atom_inputs = build_atom_inputs(posed_compound, reference.protein, keep_cross);
  prep.motif_inputs =
      build_motif_inputs(posed_compound, mc, reference.protein, mp, keep_cross);
  prep.cond_inputs = build_conditioned_inputs(posed_compound, reference.protein, mc, mp,
                                              cent_c, cent_p, keep_cross);

  prep.atom_targets.reserve(static_cast<std::size_t>(prep.atoms_m) * prep.atoms_n);
  for (int i = 0; i < prep.atoms_m; ++i)
    for (int j = 0; j < prep.atoms_n; ++j)
      prep.atom_targets.push_back(
          distance(reference.compound.coords[i], reference.protein.coords[j]));
  prep.motif_targets.reserve(static_cast<std::size_t>(prep.motifs_m) * prep.motifs_n);
  for (int a = 0; a < prep.motifs_m; ++a)
    for (int b = 0; b < prep.motifs_n; ++b)
      prep.motif_targets.push_back(distance(cent_c[a], cent_p[b]));
  return prep;
}

}  // namespace

PreparedComplex prepare_masked(const Complex &reference, const AtomGraph &posed_compound) {
  return prepare(reference, posed_compound, false);
}

PreparedComplex prepare_full(const Complex &reference) {
  return prepare(reference, reference.compound, true);
}

// ---------------------------------------------------------------------------
// Pretraining losses.
// ---------------------------------------------------------------------------

Value squared_distance_error(Tape &tape, Value preds, const std::vector<double> &targets,
                             const LossConfig &cfg) {
  const Tensor &p = tape.data(preds);
  if (p.cols != 1 || p.rows != static_cast<int>(targets.size()))
    throw ShapeError("squared_distance_error: predictions and targets disagree");
  Tensor t(p.rows, 1);
  for (int r = 0; r < p.rows; ++r)
    t.at(r, 0) = cfg.clip ? std::min(targets[r], cfg.d_max) : targets[r];
  return tape.sum_all(tape.square(tape.sub(preds, tape.constant(std::move(t)))));
}

Value atom_distance_loss(Tape &tape, Model &model, const PreparedComplex &prep,
                         const LossConfig &cfg) {
  Value h = encode_level(tape, model.atom_encoder, prep.atom_inputs, MaskPolicy::kMasked);
  Value preds = predict_pairs(tape, model.atom_head, h,
                              cross_pairs(prep.atoms_m, prep.atoms_n));
  return squared_distance_error(tape, preds, prep.atom_targets, cfg);
}

Value motif_distance_loss(Tape &tape, Model &model, const PreparedComplex &prep,
                          const LossConfig &cfg) {
  Value h = encode_level(tape, model.motif_encoder, prep.motif_inputs, MaskPolicy::kMasked);
  Value preds = predict_pairs(tape, model.motif_head, h,
                              cross_pairs(prep.motifs_m, prep.motifs_n));
  return squared_distance_error(tape, preds, prep.motif_targets, cfg);
}

Value conditioned_distance_loss(Tape &tape, Model &model, const PreparedComplex &prep,
                                const LossConfig &cfg) {
  Value h = encode_level(tape, model.cond_encoder, prep.cond_inputs, MaskPolicy::kPrior);
  Value preds = predict_pairs(tape, model.cond_head, h,
                              cross_pairs(prep.atoms_m, prep.atoms_n));
  return squared_distance_error(tape, preds, prep.atom_targets, cfg);
}

LossBundle pretrain_step(Model &model, const std::vector<Complex> &batch, AdamState &state,
                         const PretrainConfig &cfg, Rng &rng) {
  if (batch.empty()) throw ConfigError("pretrain_step: empty batch");
  std::vector<Parameter *> params = model.parameters();
  for (Parameter *p : params) p->zero_grad();

  Tape tape;
  Value atom_sum, motif_sum, cond_sum;
  bool first = true;
  for (const Complex &c : batch) {
    const RigidTransform pose = sample_rigid_transform(rng);
    const Complex posed = perturb_compound(c, pose);
    const PreparedComplex prep = prepare_masked(c, posed.compound);

    const double atom_pairs = static_cast<double>(prep.atoms_m) * prep.atoms_n;
    const double motif_pairs = static_cast<double>(prep.motifs_m) * prep.motifs_n;
    Value la = tape.scale(atom_distance_loss(tape, model, prep, cfg.loss), 1.0 / atom_pairs);
    Value lm =
        tape.scale(motif_distance_loss(tape, model, prep, cfg.loss), 1.0 / motif_pairs);
    Value lc = tape.scale(conditioned_distance_loss(tape, model, prep, cfg.loss),
                          1.0 / atom_pairs);
    if (first) {
      atom_sum = la;
      motif_sum = lm;
      cond_sum = lc;
      first = false;
    } else {
      atom_sum = tape.add(atom_sum, la);
      motif_sum = tape.add(motif_sum, lm);
      cond_sum = tape.add(cond_sum, lc);
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Value atom_mean = tape.scale(atom_sum, cfg.w_atom * inv_b);
  Value motif_mean = tape.scale(motif_sum, cfg.w_motif * inv_b);
  Value cond_mean = tape.scale(cond_sum, cfg.w_cond * inv_b);
  Value total = tape.add(tape.add(atom_mean, motif_mean), cond_mean);

  LossBundle out;
  out.atom = tape.data(atom_mean).item();
  out.motif = tape.data(motif_mean).item();
  out.conditioned = tape.data(cond_mean).item();
  out.total = tape.data(total).item();

  tape.backward(total);
  adam_step(params, state, cfg.adam);
  return out;
}

double masked_distance_rmse(Model &model, const std::vector<Complex> &batch,
                            const LossConfig &cfg) {
  if (batch.empty()) throw ConfigError("masked_distance_rmse: empty batch");
  double sq_sum = 0.0;
  std::size_t count = 0;
  for (const Complex &c : batch) {
    const PreparedComplex prep = prepare_masked(c, c.compound);
    Tape tape;
    Value h = encode_level(tape, model.atom_encoder, prep.atom_inputs, MaskPolicy::kMasked);
    Value preds = predict_pairs(tape, model.atom_head, h,
                                cross_pairs(prep.atoms_m, prep.atoms_n));
    const Tensor &p = tape.data(preds);
    for (int r = 0; r < p.rows; ++r) {
      double target = prep.atom_targets[static_cast<std::size_t>(r)];
      if (cfg.clip) target = std::min(target, cfg.d_max);
      const double err = p.at(r, 0) - target;
      sq_sum += err * err;
      ++count;
    }
  }
  return std::sqrt(sq_sum / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// Affinity fine-tuning.
// ---------------------------------------------------------------------------

Value predict_affinity(Tape &tape, Model &model, const PreparedComplex &prep) {
  auto summarize = [&](Value h, int m, int n) {
    Tensor wc(1, m), wp(1, n);
    for (int k = 0; k < m; ++k) wc.at(0, k) = 1.0 / m;
    for (int k = 0; k < n; ++k) wp.at(0, k) = 1.0 / n;
    Value c = tape.matmul(tape.constant(std::move(wc)), tape.slice_rows(h, 0, m));
    Value p = tape.matmul(tape.constant(std::move(wp)), tape.slice_rows(h, m, n));
    return tape.concat_cols(c, p);
  };
  Value ha = encode_level(tape, model.atom_encoder, prep.atom_inputs, MaskPolicy::kFull);
  Value hm = encode_level(tape, model.motif_encoder, prep.motif_inputs, MaskPolicy::kFull);
  Value hc = encode_level(tape, model.cond_encoder, prep.cond_inputs, MaskPolicy::kFull);
  Value summary = tape.concat_cols(
      tape.concat_cols(summarize(ha, prep.atoms_m, prep.atoms_n),
                       summarize(hm, prep.motifs_m, prep.motifs_n)),
      summarize(hc, prep.atoms_m, prep.atoms_n));
  return tape.add(tape.matmul(summary, tape.leaf(model.affinity_w)),
                  tape.leaf(model.affinity_b));
}

double predict_affinity_value(Model &model, const PreparedComplex &prep) {
  Tape tape;
  return tape.data(predict_affinity(tape, model, prep)).item();
}

double affinity_mse(const std::vector<double> &predictions,
                    const std::vector<double> &labels) {
  if (predictions.size() != labels.size() || predictions.empty())
    throw ShapeError("affinity_mse: size mismatch or empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double d = predictions[k] - labels[k];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

double finetune_step(Model &model, const std::vector<PreparedComplex> &batch,
                     AdamState &state, const AdamConfig &cfg) {
  if (batch.empty()) throw ConfigError("finetune_step: empty batch");
  std::vector<Parameter *> params = model.parameters();
  for (Parameter *p : params) p->zero_grad();

  Tape tape;
  Value sq_sum;
  bool first = true;
  for (const PreparedComplex &prep : batch) {
    if (!prep.affinity)
      throw ConfigError("finetune_step: complex '" + prep.id + "' has no affinity label");
    Value pred = predict_affinity(tape, model, prep);
    Value sq = tape.square(tape.sub(pred, tape.constant(Tensor::scalar(*prep.affinity))));
    sq_sum = first ? sq : tape.add(sq_sum, sq);
    first = false;
  }
  Value mse = tape.scale(sq_sum, 1.0 / static_cast<double>(batch.size()));
  const double out = tape.data(mse).item();
  tape.backward(mse);
  adam_step(params, state, cfg);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------

double metric_rmse(const std::vector<double> &predictions,
                   const std::vector<double> &truth) {
  return std::sqrt(affinity_mse(predictions, truth));
}

std::optional<double> metric_pearson(const std::vector<double> &predictions,
                                     const std::vector<double> &truth) {
  if (predictions.size() != truth.size() || predictions.empty())
    throw ShapeError("metric_pearson: size mismatch or empty input");
  const double n = static_cast<double>(predictions.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    mx += predictions[k];
    my += truth[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double dx = predictions[k] - mx;
    const double dy = truth[k] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

}  // namespace cpiformer
