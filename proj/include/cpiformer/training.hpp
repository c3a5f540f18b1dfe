//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_TRAINING_HPP_
#define CPIFORMER_TRAINING_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cpiformer/atom_graph.hpp"
#include "cpiformer/encoder.hpp"
#include "cpiformer/motif.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/tape.hpp"
#include "cpiformer/tensor.hpp"

namespace cpiformer {

// ---------------------------------------------------------------------------
// Rigid motions.
// ---------------------------------------------------------------------------

struct RigidTransform {
  std::array<double, 9> rot{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major 3x3
  Vec3 translation;

  Vec3 apply(const Vec3 &v) const;
  /// Throws NumericError unless rot is orthonormal with determinant +1,
  /// both within 1e-10.
  void validate() const;
};

/// Rotation drawn uniformly from SO(3) (unit quaternion from three
/// uniforms), translation drawn uniformly from a ball of radius 10 A.
RigidTransform sample_rigid_transform(Rng &rng);

AtomGraph apply_transform(const AtomGraph &g, const RigidTransform &t);

/// Poses the compound rigidly; the protein stays put.
Complex perturb_compound(const Complex &c, const RigidTransform &t);

// ---------------------------------------------------------------------------
// Prepared batches.
// ---------------------------------------------------------------------------

/// One complex turned into level inputs plus regression targets. Targets are
/// always measured on the reference geometry, regardless of how the inputs
/// were posed.
struct PreparedComplex {
  std::string id;
  int atoms_m = 0, atoms_n = 0;
  int motifs_m = 0, motifs_n = 0;
  LevelInputs atom_inputs;
  LevelInputs motif_inputs;
  LevelInputs cond_inputs;
  std::vector<double> atom_targets;   // atoms_m x atoms_n cross distances, row-major
  std::vector<double> motif_targets;  // motifs_m x motifs_n centroid distances
  std::optional<double> affinity;
};

/// Masked-policy inputs from the posed compound; cross geometry is not
/// materialized. Prior channels and targets come from the reference complex.
PreparedComplex prepare_masked(const Complex &reference, const AtomGraph &posed_compound);

/// Full-policy inputs from the reference geometry itself, cross distances
/// included.
PreparedComplex prepare_full(const Complex &reference);

// ---------------------------------------------------------------------------
// Pretraining losses.
// ---------------------------------------------------------------------------

struct LossConfig {
  double d_max = 20.0;  // angstroms
  bool clip = true;     // clip targets at d_max before the residual

  bool operator==(const LossConfig &) const = default;
};

/// Sum over rows of (pred - clipped target)^2; the loss form shared by all
/// three levels. preds must be rows x 1.
Value squared_distance_error(Tape &tape, Value preds, const std::vector<double> &targets,
                             const LossConfig &cfg);

/// Raw-sum losses over every compound x protein pair at the given level.
Value atom_distance_loss(Tape &tape, Model &model, const PreparedComplex &prep,
                         const LossConfig &cfg);
Value motif_distance_loss(Tape &tape, Model &model, const PreparedComplex &prep,
                          const LossConfig &cfg);
Value conditioned_distance_loss(Tape &tape, Model &model, const PreparedComplex &prep,
                                const LossConfig &cfg);

/// Scalar snapshot of the three level losses. total is atom + motif +
/// conditioned, added in that order.
struct LossBundle {
  double atom = 0.0;
  double motif = 0.0;
  double conditioned = 0.0;
  double total = 0.0;
};

struct PretrainConfig {
  LossConfig loss;
  AdamConfig adam;
  // Term weights on the summed objective; the reference form is unweighted.
  double w_atom = 1.0;
  double w_motif = 1.0;
  double w_cond = 1.0;
};

/// One optimization step over a batch: poses each compound with a fresh
/// rigid motion, evaluates the three masked losses, and applies Adam to
/// their pair-count-normalized batch means. Returns the pre-step bundle of
/// the optimized (normalized) objective.
LossBundle pretrain_step(Model &model, const std::vector<Complex> &batch, AdamState &state,
                         const PretrainConfig &cfg, Rng &rng);

/// Root mean squared error of the masked atom-level cross-distance
/// predictions against the reference geometry, pooled over the batch.
/// Targets are clipped the same way the training objective clips them, so
/// the number measures exactly what the model was asked to learn.
double masked_distance_rmse(Model &model, const std::vector<Complex> &batch,
                            const LossConfig &cfg = {});

// ---------------------------------------------------------------------------
// Affinity fine-tuning.
// ---------------------------------------------------------------------------

/// Full-policy forward through all three encoders; each contributes its
/// mean-pooled compound block next to its mean-pooled protein block, and a
/// single linear head maps the 6d summary to a scalar.
Value predict_affinity(Tape &tape, Model &model, const PreparedComplex &prep);

/// Forward-only snapshot of predict_affinity.
double predict_affinity_value(Model &model, const PreparedComplex &prep);

/// Mean squared error between per-complex predictions and labels.
double affinity_mse(const std::vector<double> &predictions, const std::vector<double> &labels);

/// One Adam step on the batch-mean squared affinity error. Every prepared
/// complex must carry a label. Returns the pre-step mean squared error.
double finetune_step(Model &model, const std::vector<PreparedComplex> &batch,
                     AdamState &state, const AdamConfig &cfg);

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------

double metric_rmse(const std::vector<double> &predictions, const std::vector<double> &truth);

/// Pearson correlation; empty when either side has zero variance, where the
/// coefficient is undefined.
std::optional<double> metric_pearson(const std::vector<double> &predictions,
                                     const std::vector<double> &truth);

}  // namespace cpiformer

#endif  // CPIFORMER_TRAINING_HPP_
