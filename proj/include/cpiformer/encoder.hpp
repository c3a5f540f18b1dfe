//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_ENCODER_HPP_
#define CPIFORMER_ENCODER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "cpiformer/atom_graph.hpp"
#include "cpiformer/motif.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/tape.hpp"
#include "cpiformer/tensor.hpp"

namespace cpiformer {

// ---------------------------------------------------------------------------
// Node-class vocabulary.
//
// Atoms fall into 9 element buckets; each bucket exists once per molecule
// side, so the atom vocabulary has 18 classes. Motifs fall into
// {ring, chain, backbone} per side, 6 classes. Pair types are unordered, so
// a vocabulary of K classes yields K*(K+1)/2 pair types.
// ---------------------------------------------------------------------------

enum class Side { kCompound = 0, kProtein = 1 };

enum ElementBucket {
  kBucketC = 0,
  kBucketN = 1,
  kBucketO = 2,
  kBucketS = 3,
  kBucketP = 4,
  kBucketHalogen = 5,
  kBucketMetal = 6,
  kBucketOther = 7,
  kBucketUnknown = 8,
};

enum MotifKind {
  kMotifRing = 0,
  kMotifChain = 1,
  kMotifBackbone = 2,
};

constexpr int kElementBucketCount = 9;
constexpr int kAtomClassCount = 2 * kElementBucketCount;           // 18
constexpr int kAtomPairTypeCount = kAtomClassCount * (kAtomClassCount + 1) / 2;  // 171
constexpr int kMotifClassCount = 6;
constexpr int kMotifPairTypeCount = kMotifClassCount * (kMotifClassCount + 1) / 2;  // 21

/// Bucket for an element symbol (case-insensitive). Symbols that are not a
/// recognized element map to kBucketUnknown.
int element_bucket(const std::string &element);

/// Class id in [0, 18): bucket + 9 * side.
int atom_class(const std::string &element, Side side);

/// Kind of one motif: backbone if any member atom carries the backbone flag,
/// ring if the member-induced subgraph contains a cycle, chain otherwise.
int motif_kind(const AtomGraph &g, const std::vector<int> &members);

/// Class id in [0, 6): kind + 3 * side.
int motif_class(int kind, Side side);

/// Canonical index of an unordered class pair within a K-class vocabulary.
/// With a <= b the index is a*K - a*(a-1)/2 + (b-a); arguments may come in
/// either order. Result lies in [0, K*(K+1)/2).
int pair_type(int class_a, int class_b, int class_count);

// ---------------------------------------------------------------------------
// Gaussian spatial encoding.
// ---------------------------------------------------------------------------

/// Trainable kernel bank: C Gaussian kernels shared across pair types plus a
/// per-pair-type affine (alpha, beta) applied to the distance before the
/// kernels. sigma is kept positive through a softplus reparameterization.
struct SpeParams {
  int kernels = 0;     // C
  int pair_types = 0;  // T
  Parameter mu;        // C x 1, kernel centers
  Parameter sigma_raw; // C x 1, kernel widths via softplus
  Parameter alpha;     // T x 1, per-type distance scale
  Parameter beta;      // T x 1, per-type distance shift

  SpeParams() = default;
  /// mu evenly spaced on [0, mu_max], sigma = grid spacing times sigma_scale,
  /// alpha = 1, beta = 0. Deterministic.
  SpeParams(const std::string &prefix, int kernels, int pair_types, double mu_max,
            double sigma_scale = 1.0);

  void collect(std::vector<Parameter *> &out);
};

double softplus_value(double x);
/// Inverse of softplus_value on positive input.
double softplus_inverse(double y);

/// Evaluates the C kernels for one pair: s_k = N(alpha_t * d + beta_t; mu_k,
/// sigma_k) with N the normalized Gaussian density. Distances are
/// nonnegative by construction; a negative d throws NumericError.
std::vector<double> gaussian_spe(double d, int t, const SpeParams &params);

// ---------------------------------------------------------------------------
// Per-level encoder input.
// ---------------------------------------------------------------------------

/// How cross-molecular pairs enter the spatial encoding.
///   kMasked : cross channels come from a learned mask vector; cross
///             geometry never enters the computation.
///   kFull   : cross channels are Gaussian encodings of true distances.
///   kPrior  : like kMasked for the base channels, but the conditioned
///             encoder's prior channels carry coarse-level distances.
enum class MaskPolicy { kMasked, kFull, kPrior };

/// Flattened pairwise input for one encoding level. Nodes are ordered
/// compound block first ([0, m)) then protein block ([m, m+n)); pairs are
/// row-major over (i, j) with p = i * (m + n) + j.
///
/// All geometric distances are rounded to float precision on construction so
/// that rigid motions of the inputs reproduce them bit-for-bit.
struct LevelInputs {
  int m = 0;  // compound-side node count
  int n = 0;  // protein-side node count

  std::vector<int> classes;      // per node, id in the level vocabulary
  std::vector<double> distances; // per pair; zero for cross pairs unless kept
  std::vector<int> types;        // per pair, unordered pair type
  std::vector<char> cross;       // per pair, 1 iff the pair spans molecules

  // Populated only for the conditioned level: coarse distances between the
  // parents of i and j (cross pairs only, zero elsewhere) and their motif
  // pair types.
  std::vector<double> prior_distances;
  std::vector<int> prior_types;

  // Embedding source. X rows are means of embedding-table rows: node r
  // averages table rows embed_classes[k] for k in embed_members[r]. Atom
  // levels use one member per node; the motif level lists member atoms.
  std::vector<int> embed_classes;
  std::vector<std::vector<int>> embed_members;

  bool unknown_class = false;  // any node fell into an UNK bucket

  int total() const { return m + n; }
  int pair_count() const { return total() * total(); }
};

/// keep_cross controls whether cross-pair distances are materialized; pass
/// false when the level will run under a masked policy so pose information
/// cannot leak through unused inputs.
LevelInputs build_atom_inputs(const AtomGraph &compound, const AtomGraph &protein,
                              bool keep_cross);

LevelInputs build_motif_inputs(const AtomGraph &compound, const MotifGraph &compound_motifs,
                               const AtomGraph &protein, const MotifGraph &protein_motifs,
                               bool keep_cross);

/// Conditioned level: atom-grained nodes whose prior channels carry
/// motif-centroid distances for cross pairs. The centroids must come from the
/// reference (unperturbed) geometry; the atom coordinates may be posed.
LevelInputs build_conditioned_inputs(const AtomGraph &compound, const AtomGraph &protein,
                                     const MotifGraph &compound_motifs,
                                     const MotifGraph &protein_motifs,
                                     const std::vector<Vec3> &reference_compound_centroids,
                                     const std::vector<Vec3> &reference_protein_centroids,
                                     bool keep_cross);

// ---------------------------------------------------------------------------
// Encoder weights.
// ---------------------------------------------------------------------------

struct LayerWeights {
  std::vector<Parameter> wq, wk, wv;  // per head, d x d_head
  Parameter wo;                       // d x d
  Parameter bo;                       // 1 x d
  Parameter ffn_w1;                   // d x 4d
  Parameter ffn_b1;                   // 1 x 4d
  Parameter ffn_w2;                   // 4d x d
  Parameter ffn_b2;                   // 1 x d
  Parameter ln1_gain, ln1_bias;       // 1 x d
  Parameter ln2_gain, ln2_bias;       // 1 x d
  Parameter bias_reduce_w;            // channels x heads
  Parameter bias_reduce_b;            // 1 x heads

  void collect(std::vector<Parameter *> &out);
};

/// One residual pre-norm-free transformer encoder (post-norm, as in the
/// original formulation) with additive per-head spatial bias.
struct EncoderWeights {
  std::string prefix;
  int d_model = 0;
  int heads = 0;
  int channels = 0;  // spatial channels entering each layer's bias reduction

  Parameter embedding;    // vocabulary x d_model
  Parameter mask_vector;  // 1 x base kernel count, zeros at init
  SpeParams spe;
  std::optional<SpeParams> prior_spe;  // conditioned encoder only
  bool prior_enabled = true;           // ablation: false zeroes prior channels
  std::vector<LayerWeights> layers;

  void collect(std::vector<Parameter *> &out);
};

EncoderWeights make_encoder(const std::string &prefix, int vocabulary, int pair_types,
                            int layers, int heads, int d_model, int kernels, double mu_max,
                            bool with_prior, Rng &rng, double sigma_scale = 1.0);

/// Two-layer MLP head mapping a node-pair feature [h_i | h_j | h_i*h_j] to a
/// nonnegative scalar through softplus. Predictions are symmetrized as
/// (f(i,j) + f(j,i)) / 2.
struct DistanceHead {
  Parameter w1;  // 3d x d
  Parameter b1;  // 1 x d
  Parameter w2;  // d x 1
  Parameter b2;  // 1 x 1

  DistanceHead() = default;
  DistanceHead(const std::string &prefix, int d_model, Rng &rng);

  void collect(std::vector<Parameter *> &out);
};

// ---------------------------------------------------------------------------
// Forward passes.
// ---------------------------------------------------------------------------

/// Materialized spatial-encoding blocks for one level, split by molecule
/// block. s_c is m*m x channels (row-major over intra-compound pairs), s_p is
/// n*n x channels, s_cp is m*n x channels, s_pc is n*m x channels.
struct SpeBlocks {
  int m = 0;
  int n = 0;
  int channels = 0;
  MaskPolicy policy = MaskPolicy::kMasked;
  Tensor s_c, s_p, s_cp, s_pc;
};

struct EmbedResult {
  Tensor x;  // (m+n) x d_model initial node states
  SpeBlocks spe;
};

/// Differentiable construction of the full pairwise spatial-channel matrix,
/// (m+n)^2 x channels. This is the single source of truth for the spatial
/// encoding; snapshots below evaluate through it.
Value spe_matrix(Tape &tape, EncoderWeights &enc, const LevelInputs &in, MaskPolicy policy);

/// Differentiable initial node states, (m+n) x d_model.
Value embed_nodes(Tape &tape, EncoderWeights &enc, const LevelInputs &in);

/// Forward-only snapshot of embed_nodes + spe_matrix with current weights.
EmbedResult embed_level(const EncoderWeights &enc, const LevelInputs &in, MaskPolicy policy);

/// Runs the layer stack over initial states x with spatial channels spe.
/// With zero layers the output is x itself.
Value encode_states(Tape &tape, EncoderWeights &enc, Value x, Value spe, int nodes);

/// Full differentiable level forward: embed, spatial channels, layers.
Value encode_level(Tape &tape, EncoderWeights &enc, const LevelInputs &in, MaskPolicy policy);

/// Forward-only snapshot of encode_level with current weights.
Tensor encode_forward(const EncoderWeights &enc, const LevelInputs &in, MaskPolicy policy);

/// Reference attention-weight computation for one head:
/// softmax(x Wq (x Wk)^T / sqrt(d_head) + bias). Forward-only.
Tensor biased_attention(const Tensor &x, const Tensor &wq, const Tensor &wk,
                        const Tensor &bias);

/// Symmetrized nonnegative pair predictions for the given (i, j) row pairs of
/// the node-state matrix h. Returns a pairs x 1 value.
Value predict_pairs(Tape &tape, DistanceHead &head, Value h,
                    const std::vector<std::pair<int, int>> &pairs);

/// Forward-only single-pair prediction from explicit node states.
double predict_distance(const DistanceHead &head, const std::vector<double> &hi,
                        const std::vector<double> &hj);

// ---------------------------------------------------------------------------
// Whole model.
// ---------------------------------------------------------------------------

struct ModelConfig {
  int layers = 4;
  int heads = 8;
  int d_model = 128;
  int kernels = 16;
  double mu_max = 12.0;
  double sigma_scale = 1.0;   // multiplies the initial kernel width
  bool prior_enabled = true;  // ablation switch for the conditioned prior

  void validate() const;  // throws ConfigError on nonsensical values

  bool operator==(const ModelConfig &) const = default;
};

/// Three independent encoders (atom level, motif level, conditioned atom
/// level), one distance head per encoder, and a scalar affinity head over
/// pooled states. The affinity head starts at zero so an untrained model
/// predicts 0 regardless of input.
struct Model {
  ModelConfig config;
  EncoderWeights atom_encoder;
  EncoderWeights motif_encoder;
  EncoderWeights cond_encoder;
  DistanceHead atom_head;
  DistanceHead motif_head;
  DistanceHead cond_head;
  Parameter affinity_w;  // 6d x 1, zero-initialized
  Parameter affinity_b;  // 1 x 1, zero-initialized

  Model(const ModelConfig &cfg, Rng &rng);

  /// Stable enumeration used by the optimizer and checkpoints.
  std::vector<Parameter *> parameters();
};

}  // namespace cpiformer

#endif  // CPIFORMER_ENCODER_HPP_
