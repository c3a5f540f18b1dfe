//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_set>
#include <utility>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

/// Distances are rounded to float precision before entering the model so
/// that rigid motions, which preserve them only up to double rounding,
/// reproduce the inputs bit-for-bit.
double quantize_distance(double d) { return static_cast<double>(static_cast<float>(d)); }

std::string normalize_element(const std::string &element) {
  std::string s;
  for (char c : element)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (!s.empty()) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    for (std::size_t k = 1; k < s.size(); ++k)
      s[k] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[k])));
  }
  return s;
}

const std::unordered_set<std::string> &halogen_set() {
  static const std::unordered_set<std::string> s = {"F", "Cl", "Br", "I", "At"};
  return s;
}

const std::unordered_set<std::string> &metal_set() {
  static const std::unordered_set<std::string> s = {
      "Li", "Be", "Na", "Mg", "Al", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn",
      "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo",
      "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Cs", "Ba", "La", "Ce",
      "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
      "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb",
      "Bi", "Po", "Fr", "Ra"};
  return s;
}

/// Recognized non-metal elements outside the named buckets.
const std::unordered_set<std::string> &other_set() {
  static const std::unordered_set<std::string> s = {"B",  "Si", "Ge", "As", "Sb",
                                                    "Se", "Te", "He", "Ne", "Ar",
                                                    "Kr", "Xe", "Rn", "H",  "D",
                                                    "T"};
  return s;
}

Tensor uniform_init(int rows, int cols, double bound, Rng &rng) {
  Tensor t(rows, cols);
  t.fill_uniform(rng, -bound, bound);
  return t;
}

}  // namespace

int element_bucket(const std::string &element) {
  const std::string s = normalize_element(element);
  if (s == "C") return kBucketC;
  if (s == "N") return kBucketN;
  if (s == "O") return kBucketO;
  if (s == "S") return kBucketS;
  if (s == "P") return kBucketP;
  if (halogen_set().count(s)) return kBucketHalogen;
  if (metal_set().count(s)) return kBucketMetal;
  if (other_set().count(s)) return kBucketOther;
  return kBucketUnknown;
}

int atom_class(const std::string &element, Side side) {
  return element_bucket(element) + kElementBucketCount * static_cast<int>(side);
}

int motif_kind(const AtomGraph &g, const std::vector<int> &members) {
  for (int a : members) {
    if (a < 0 || a >= g.size())
      throw ShapeError("motif_kind: member index out of range");
    if (g.atoms[a].backbone.value_or(false)) return kMotifBackbone;
  }
  const std::set<int> member_set(members.begin(), members.end());
  int induced = 0;
  for (const Bond &b : g.bonds)
    if (member_set.count(b.i) && member_set.count(b.j)) ++induced;
  // A connected subgraph holds a cycle iff it has at least as many edges as
  // vertices.
  return induced >= static_cast<int>(members.size()) ? kMotifRing : kMotifChain;
}

int motif_class(int kind, Side side) { return kind + 3 * static_cast<int>(side); }

int pair_type(int class_a, int class_b, int class_count) {
  if (class_a < 0 || class_b < 0 || class_a >= class_count || class_b >= class_count)
    throw ShapeError("pair_type: class id out of range");
  int a = class_a, b = class_b;
  if (a > b) std::swap(a, b);
  return a * class_count - a * (a - 1) / 2 + (b - a);
}

double softplus_value(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw NumericError("softplus_inverse requires a positive input");
  // log(exp(y) - 1), rearranged to stay stable for small and large y.
  return y + std::log(-std::expm1(-y));
}

SpeParams::SpeParams(const std::string &prefix, int kernels_in, int pair_types_in,
                     double mu_max, double sigma_scale)
    : kernels(kernels_in),
      pair_types(pair_types_in),
      mu(prefix + ".mu", Tensor::zeros(kernels_in, 1)),
      sigma_raw(prefix + ".sigma", Tensor::zeros(kernels_in, 1)),
      alpha(prefix + ".alpha", Tensor::full(pair_types_in, 1, 1.0)),
      beta(prefix + ".beta", Tensor::zeros(pair_types_in, 1)) {
  if (kernels_in < 2) throw ConfigError("spatial encoding needs at least 2 kernels");
  if (pair_types_in < 1) throw ConfigError("spatial encoding needs at least 1 pair type");
  if (!(mu_max > 0.0)) throw ConfigError("mu_max must be positive");
  if (!(sigma_scale > 0.0)) throw ConfigError("sigma_scale must be positive");
  const double spacing = mu_max / (kernels_in - 1);
  for (int k = 0; k < kernels_in; ++k) mu.value.at(k, 0) = spacing * k;
  const double raw = softplus_inverse(spacing * sigma_scale);
  for (int k = 0; k < kernels_in; ++k) sigma_raw.value.at(k, 0) = raw;
}

void SpeParams::collect(std::vector<Parameter *> &out) {
  out.push_back(&mu);
  out.push_back(&sigma_raw);
  out.push_back(&alpha);
  out.push_back(&beta);
}

std::vector<double> gaussian_spe(double d, int t, const SpeParams &params) {
  if (d < 0.0) throw NumericError("gaussian_spe: negative distance");
  if (t < 0 || t >= params.pair_types)
    throw ShapeError("gaussian_spe: pair type out of range");
  std::vector<double> out(params.kernels);
  const double x = d * params.alpha.value.at(t, 0) + params.beta.value.at(t, 0);
  for (int k = 0; k < params.kernels; ++k) {
    const double sigma = softplus_value(params.sigma_raw.value.at(k, 0));
    const double z = x - params.mu.value.at(k, 0);
    const double e = std::exp(-((z * z) / ((sigma * sigma) * 2.0)));
    out[k] = (1.0 / (sigma * kSqrt2Pi)) * e;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input builders.
// ---------------------------------------------------------------------------

namespace {

void fill_pairs(LevelInputs &in, const std::vector<Vec3> &coords, int class_count,
                bool keep_cross) {
  const int total = in.total();
  in.distances.assign(static_cast<std::size_t>(total) * total, 0.0);
  in.types.resize(static_cast<std::size_t>(total) * total);
  in.cross.resize(static_cast<std::size_t>(total) * total);
  for (int i = 0; i < total; ++i)
    for (int j = 0; j < total; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * total + j;
      const bool is_cross = (i < in.m) != (j < in.m);
      in.cross[p] = is_cross ? 1 : 0;
      in.types[p] = pair_type(in.classes[i], in.classes[j], class_count);
      if (!is_cross || keep_cross)
        in.distances[p] = quantize_distance(distance(coords[i], coords[j]));
    }
}

std::vector<Vec3> motif_centroids(const AtomGraph &g, const MotifGraph &mg) {
  std::vector<Vec3> out(mg.size());
  for (int r = 0; r < mg.size(); ++r) {
    Vec3 sum;
    for (int a : mg.motifs[r]) sum = sum + g.coords[a];
    out[r] = sum * (1.0 / static_cast<double>(mg.motifs[r].size()));
  }
  return out;
}

void require_nonempty(const AtomGraph &compound, const AtomGraph &protein,
                      const char *who) {
  if (compound.empty() || protein.empty())
    throw ShapeError(std::string(who) + ": both molecules must be non-empty");
}

}  // namespace

LevelInputs build_atom_inputs(const AtomGraph &compound, const AtomGraph &protein,
                              bool keep_cross) {
  require_nonempty(compound, protein, "build_atom_inputs");
  LevelInputs in;
  in.m = compound.size();
  in.n = protein.size();
  std::vector<Vec3> coords;
  coords.reserve(in.total());
  for (const Atom &a : compound.atoms) {
    in.classes.push_back(atom_class(a.element, Side::kCompound));
    in.unknown_class |= element_bucket(a.element) == kBucketUnknown;
  }
  for (const Atom &a : protein.atoms) {
    in.classes.push_back(atom_class(a.element, Side::kProtein));
    in.unknown_class |= element_bucket(a.element) == kBucketUnknown;
  }
  coords.insert(coords.end(), compound.coords.begin(), compound.coords.end());
  coords.insert(coords.end(), protein.coords.begin(), protein.coords.end());
  fill_pairs(in, coords, kAtomClassCount, keep_cross);
  in.embed_classes = in.classes;
  in.embed_members.resize(in.total());
  for (int r = 0; r < in.total(); ++r) in.embed_members[r] = {r};
  return in;
}

LevelInputs build_motif_inputs(const AtomGraph &compound, const MotifGraph &compound_motifs,
                               const AtomGraph &protein, const MotifGraph &protein_motifs,
                               bool keep_cross) {
  require_nonempty(compound, protein, "build_motif_inputs");
  LevelInputs in;
  in.m = compound_motifs.size();
  in.n = protein_motifs.size();
  if (in.m == 0 || in.n == 0)
    throw ShapeError("build_motif_inputs: both motif graphs must be non-empty");
  for (int r = 0; r < in.m; ++r)
    in.classes.push_back(
        motif_class(motif_kind(compound, compound_motifs.motifs[r]), Side::kCompound));
  for (int r = 0; r < in.n; ++r)
    in.classes.push_back(
        motif_class(motif_kind(protein, protein_motifs.motifs[r]), Side::kProtein));

  std::vector<Vec3> centroids = motif_centroids(compound, compound_motifs);
  const std::vector<Vec3> pc = motif_centroids(protein, protein_motifs);
  centroids.insert(centroids.end(), pc.begin(), pc.end());
  fill_pairs(in, centroids, kMotifClassCount, keep_cross);

  for (const Atom &a : compound.atoms) {
    in.embed_classes.push_back(atom_class(a.element, Side::kCompound));
    in.unknown_class |= element_bucket(a.element) == kBucketUnknown;
  }
  for (const Atom &a : protein.atoms) {
    in.embed_classes.push_back(atom_class(a.element, Side::kProtein));
    in.unknown_class |= element_bucket(a.element) == kBucketUnknown;
  }
  in.embed_members.resize(in.total());
  for (int r = 0; r < in.m; ++r) in.embed_members[r] = compound_motifs.motifs[r];
  for (int r = 0; r < in.n; ++r) {
    in.embed_members[in.m + r] = protein_motifs.motifs[r];
    for (int &a : in.embed_members[in.m + r]) a += compound.size();
  }
  return in;
}

LevelInputs build_conditioned_inputs(const AtomGraph &compound, const AtomGraph &protein,
                                     const MotifGraph &compound_motifs,
                                     const MotifGraph &protein_motifs,
                                     const std::vector<Vec3> &reference_compound_centroids,
                                     const std::vector<Vec3> &reference_protein_centroids,
                                     bool keep_cross) {
  LevelInputs in = build_atom_inputs(compound, protein, keep_cross);
  if (static_cast<int>(reference_compound_centroids.size()) != compound_motifs.size() ||
      static_cast<int>(reference_protein_centroids.size()) != protein_motifs.size())
    throw ShapeError("build_conditioned_inputs: centroid/motif count mismatch");
  if (static_cast<int>(compound_motifs.parent.size()) != compound.size() ||
      static_cast<int>(protein_motifs.parent.size()) != protein.size())
    throw ShapeError("build_conditioned_inputs: parent map does not cover the atoms");

  std::vector<int> motif_classes(compound_motifs.size() + protein_motifs.size());
  for (int r = 0; r < compound_motifs.size(); ++r)
    motif_classes[r] =
        motif_class(motif_kind(compound, compound_motifs.motifs[r]), Side::kCompound);
  for (int r = 0; r < protein_motifs.size(); ++r)
    motif_classes[compound_motifs.size() + r] =
        motif_class(motif_kind(protein, protein_motifs.motifs[r]), Side::kProtein);

  const int total = in.total();
  in.prior_distances.assign(static_cast<std::size_t>(total) * total, 0.0);
  in.prior_types.assign(static_cast<std::size_t>(total) * total, 0);
  for (int i = 0; i < total; ++i)
    for (int j = 0; j < total; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * total + j;
      if (!in.cross[p]) continue;
      const int ci = i < in.m ? i : j;          // compound-side atom
      const int pj = i < in.m ? j : i;          // protein-side atom
      const int mi = compound_motifs.parent[ci];
      const int mj = protein_motifs.parent[pj - in.m];
      in.prior_distances[p] = quantize_distance(distance(
          reference_compound_centroids[mi], reference_protein_centroids[mj]));
      in.prior_types[p] = pair_type(motif_classes[mi],
                                    motif_classes[compound_motifs.size() + mj],
                                    kMotifClassCount);
    }
  return in;
}

// ---------------------------------------------------------------------------
// Weight construction.
// ---------------------------------------------------------------------------

void LayerWeights::collect(std::vector<Parameter *> &out) {
  for (auto &p : wq) out.push_back(&p);
  for (auto &p : wk) out.push_back(&p);
  for (auto &p : wv) out.push_back(&p);
  out.push_back(&wo);
  out.push_back(&bo);
  out.push_back(&ffn_w1);
  out.push_back(&ffn_b1);
  out.push_back(&ffn_w2);
  out.push_back(&ffn_b2);
  out.push_back(&ln1_gain);
  out.push_back(&ln1_bias);
  out.push_back(&ln2_gain);
  out.push_back(&ln2_bias);
  out.push_back(&bias_reduce_w);
  out.push_back(&bias_reduce_b);
}

void EncoderWeights::collect(std::vector<Parameter *> &out) {
  out.push_back(&embedding);
  out.push_back(&mask_vector);
  spe.collect(out);
  if (prior_spe) prior_spe->collect(out);
  for (auto &l : layers) l.collect(out);
}

EncoderWeights make_encoder(const std::string &prefix, int vocabulary, int pair_types,
                            int layers, int heads, int d_model, int kernels, double mu_max,
                            bool with_prior, Rng &rng, double sigma_scale) {
  if (layers < 0 || heads < 1 || d_model < 1 || d_model % heads != 0)
    throw ConfigError("encoder: d_model must be a positive multiple of heads");
  EncoderWeights enc;
  enc.prefix = prefix;
  enc.d_model = d_model;
  enc.heads = heads;
  enc.channels = with_prior ? 2 * kernels : kernels;
  const double wb = 1.0 / std::sqrt(static_cast<double>(d_model));
  enc.embedding = Parameter(prefix + ".embedding",
                            uniform_init(vocabulary, d_model, wb, rng));
  enc.mask_vector = Parameter(prefix + ".mask", Tensor::zeros(1, kernels));
  enc.spe = SpeParams(prefix + ".spe", kernels, pair_types, mu_max, sigma_scale);
  if (with_prior)
    enc.prior_spe =
        SpeParams(prefix + ".prior", kernels, kMotifPairTypeCount, mu_max, sigma_scale);

  const int d_head = d_model / heads;
  const double cb = 1.0 / std::sqrt(static_cast<double>(enc.channels));
  const double fb = 1.0 / std::sqrt(static_cast<double>(4 * d_model));
  for (int l = 0; l < layers; ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    LayerWeights lw;
    for (int h = 0; h < heads; ++h) {
      const std::string hp = lp + ".head" + std::to_string(h);
      lw.wq.emplace_back(hp + ".q", uniform_init(d_model, d_head, wb, rng));
      lw.wk.emplace_back(hp + ".k", uniform_init(d_model, d_head, wb, rng));
      lw.wv.emplace_back(hp + ".v", uniform_init(d_model, d_head, wb, rng));
    }
    lw.wo = Parameter(lp + ".wo", uniform_init(d_model, d_model, wb, rng));
    lw.bo = Parameter(lp + ".bo", Tensor::zeros(1, d_model));
    lw.ffn_w1 = Parameter(lp + ".ffn_w1", uniform_init(d_model, 4 * d_model, wb, rng));
    lw.ffn_b1 = Parameter(lp + ".ffn_b1", Tensor::zeros(1, 4 * d_model));
    lw.ffn_w2 = Parameter(lp + ".ffn_w2", uniform_init(4 * d_model, d_model, fb, rng));
    lw.ffn_b2 = Parameter(lp + ".ffn_b2", Tensor::zeros(1, d_model));
    lw.ln1_gain = Parameter(lp + ".ln1_gain", Tensor::ones(1, d_model));
    lw.ln1_bias = Parameter(lp + ".ln1_bias", Tensor::zeros(1, d_model));
    lw.ln2_gain = Parameter(lp + ".ln2_gain", Tensor::ones(1, d_model));
    lw.ln2_bias = Parameter(lp + ".ln2_bias", Tensor::zeros(1, d_model));
    lw.bias_reduce_w = Parameter(lp + ".bias_w", uniform_init(enc.channels, heads, cb, rng));
    lw.bias_reduce_b = Parameter(lp + ".bias_b", Tensor::zeros(1, heads));
    enc.layers.push_back(std::move(lw));
  }
  return enc;
}

DistanceHead::DistanceHead(const std::string &prefix, int d_model, Rng &rng)
    : w1(prefix + ".w1",
         uniform_init(3 * d_model, d_model, 1.0 / std::sqrt(3.0 * d_model), rng)),
      b1(prefix + ".b1", Tensor::zeros(1, d_model)),
      w2(prefix + ".w2", uniform_init(d_model, 1, 1.0 / std::sqrt(static_cast<double>(d_model)), rng)),
      b2(prefix + ".b2", Tensor::zeros(1, 1)) {}

void DistanceHead::collect(std::vector<Parameter *> &out) {
  out.push_back(&w1);
  out.push_back(&b1);
  out.push_back(&w2);
  out.push_back(&b2);
}

// ---------------------------------------------------------------------------
// Forward passes.
// ---------------------------------------------------------------------------

namespace {

/// On-tape Gaussian channels for a list of (distance, pair-type) rows.
/// Matches gaussian_spe term for term.
Value gaussian_rows(Tape &tape, SpeParams &params, const std::vector<double> &dist,
                    const std::vector<int> &types) {
  const int rows = static_cast<int>(dist.size());
  const int c = params.kernels;
  Tensor dcol(rows, 1);
  for (int k = 0; k < rows; ++k) {
    if (dist[k] < 0.0) throw NumericError("gaussian_rows: negative distance");
    dcol.at(k, 0) = dist[k];
  }
  Value d = tape.constant(std::move(dcol));
  Value a = tape.gather_rows(tape.leaf(params.alpha), types);
  Value b = tape.gather_rows(tape.leaf(params.beta), types);
  Value x = tape.add(tape.mul(d, a), b);                       // rows x 1
  Value ones_row = tape.constant(Tensor::ones(1, c));
  Value ones_col = tape.constant(Tensor::ones(rows, 1));
  Value xb = tape.matmul(x, ones_row);                          // rows x c
  Value mu_b = tape.matmul(ones_col, tape.transpose(tape.leaf(params.mu)));
  Value sg_b = tape.matmul(ones_col,
                           tape.transpose(tape.softplus(tape.leaf(params.sigma_raw))));
  Value z2 = tape.square(tape.sub(xb, mu_b));
  Value den = tape.scale(tape.square(sg_b), 2.0);
  Value e = tape.exp(tape.scale(tape.div(z2, den), -1.0));
  Value coef = tape.div(tape.constant(Tensor::ones(rows, c)), tape.scale(sg_b, kSqrt2Pi));
  return tape.mul(coef, e);
}

struct PairSplit {
  std::vector<int> intra, cross;
  std::vector<int> assemble;  // final row -> row in [intra block | cross block]
};

PairSplit split_pairs(const LevelInputs &in) {
  PairSplit s;
  const int pairs = in.pair_count();
  s.assemble.resize(pairs);
  for (int p = 0; p < pairs; ++p)
    if (in.cross[p]) s.cross.push_back(p);
    else s.intra.push_back(p);
  for (std::size_t k = 0; k < s.intra.size(); ++k) s.assemble[s.intra[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < s.cross.size(); ++k)
    s.assemble[s.cross[k]] = static_cast<int>(s.intra.size() + k);
  return s;
}

template <typename T>
std::vector<T> take(const std::vector<T> &v, const std::vector<int> &idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int k : idx) out.push_back(v[k]);
  return out;
}

}  // namespace

Value spe_matrix(Tape &tape, EncoderWeights &enc, const LevelInputs &in,
                 MaskPolicy policy) {
  if (in.m < 1 || in.n < 1)
    throw ShapeError("spe_matrix: both molecule blocks must be non-empty");
  const PairSplit split = split_pairs(in);
  const int kernels = enc.spe.kernels;

  Value base_intra =
      gaussian_rows(tape, enc.spe, take(in.distances, split.intra), take(in.types, split.intra));
  Value base_cross;
  if (policy == MaskPolicy::kFull) {
    base_cross = gaussian_rows(tape, enc.spe, take(in.distances, split.cross),
                               take(in.types, split.cross));
  } else {
    Value ones = tape.constant(Tensor::ones(static_cast<int>(split.cross.size()), 1));
    base_cross = tape.matmul(ones, tape.leaf(enc.mask_vector));
  }
  Value base = tape.gather_rows(tape.concat_rows(base_intra, base_cross), split.assemble);

  if (!enc.prior_spe) return base;

  Value prior;
  if (!enc.prior_enabled) {
    prior = tape.constant(Tensor::zeros(in.pair_count(), kernels));
  } else {
    if (in.prior_distances.size() != static_cast<std::size_t>(in.pair_count()))
      throw ShapeError("spe_matrix: conditioned inputs lack prior distances");
    Value prior_cross = gaussian_rows(tape, *enc.prior_spe,
                                      take(in.prior_distances, split.cross),
                                      take(in.prior_types, split.cross));
    Value prior_intra =
        tape.constant(Tensor::zeros(static_cast<int>(split.intra.size()), kernels));
    prior = tape.gather_rows(tape.concat_rows(prior_intra, prior_cross), split.assemble);
  }
  return tape.concat_cols(base, prior);
}

Value embed_nodes(Tape &tape, EncoderWeights &enc, const LevelInputs &in) {
  Value rows = tape.gather_rows(tape.leaf(enc.embedding), in.embed_classes);
  Tensor avg(in.total(), static_cast<int>(in.embed_classes.size()));
  for (int r = 0; r < in.total(); ++r) {
    const auto &members = in.embed_members[r];
    if (members.empty()) throw ShapeError("embed_nodes: node with no embedding source");
    const double w = 1.0 / static_cast<double>(members.size());
    for (int k : members) avg.at(r, k) = w;
  }
  return tape.matmul(tape.constant(std::move(avg)), rows);
}

Value encode_states(Tape &tape, EncoderWeights &enc, Value x, Value spe, int nodes) {
  const int d_head = enc.d_model / enc.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
  for (LayerWeights &lw : enc.layers) {
    Value reduced = tape.add_rows(tape.matmul(spe, tape.leaf(lw.bias_reduce_w)),
                                  tape.leaf(lw.bias_reduce_b));  // pairs x heads
    Value cat;
    for (int h = 0; h < enc.heads; ++h) {
      Value q = tape.matmul(x, tape.leaf(lw.wq[h]));
      Value k = tape.matmul(x, tape.leaf(lw.wk[h]));
      Value v = tape.matmul(x, tape.leaf(lw.wv[h]));
      Value scores = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt);
      Value bias = tape.reshape(tape.slice_cols(reduced, h, 1), nodes, nodes);
      Value att = tape.softmax_rows(tape.add(scores, bias));
      Value head_out = tape.matmul(att, v);
      cat = h == 0 ? head_out : tape.concat_cols(cat, head_out);
    }
    Value o = tape.add_rows(tape.matmul(cat, tape.leaf(lw.wo)), tape.leaf(lw.bo));
    Value n1 = tape.add_rows(tape.mul_rows(tape.layer_norm_rows(tape.add(x, o)),
                                           tape.leaf(lw.ln1_gain)),
                             tape.leaf(lw.ln1_bias));
    Value hidden = tape.relu(
        tape.add_rows(tape.matmul(n1, tape.leaf(lw.ffn_w1)), tape.leaf(lw.ffn_b1)));
    Value f = tape.add_rows(tape.matmul(hidden, tape.leaf(lw.ffn_w2)), tape.leaf(lw.ffn_b2));
    x = tape.add_rows(tape.mul_rows(tape.layer_norm_rows(tape.add(n1, f)),
                                    tape.leaf(lw.ln2_gain)),
                      tape.leaf(lw.ln2_bias));
  }
  return x;
}

Value encode_level(Tape &tape, EncoderWeights &enc, const LevelInputs &in,
                   MaskPolicy policy) {
  Value x = embed_nodes(tape, enc, in);
  Value spe = spe_matrix(tape, enc, in, policy);
  return encode_states(tape, enc, x, spe, in.total());
}

namespace {

SpeBlocks blocks_from_matrix(const Tensor &s, int m, int n, MaskPolicy policy) {
  SpeBlocks b;
  b.m = m;
  b.n = n;
  b.channels = s.cols;
  b.policy = policy;
  const int total = m + n;
  b.s_c = Tensor(m * m, s.cols);
  b.s_p = Tensor(n * n, s.cols);
  b.s_cp = Tensor(m * n, s.cols);
  b.s_pc = Tensor(n * m, s.cols);
  auto copy_row = [&](Tensor &dst, int dst_row, int src_row) {
    for (int c = 0; c < s.cols; ++c) dst.at(dst_row, c) = s.at(src_row, c);
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) copy_row(b.s_c, i * m + j, i * total + j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) copy_row(b.s_p, i * n + j, (m + i) * total + (m + j));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) copy_row(b.s_cp, i * n + j, i * total + (m + j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) copy_row(b.s_pc, i * m + j, (m + i) * total + j);
  return b;
}

}  // namespace

EmbedResult embed_level(const EncoderWeights &enc, const LevelInputs &in,
                        MaskPolicy policy) {
  EncoderWeights &mut = const_cast<EncoderWeights &>(enc);
  Tape tape;
  Value x = embed_nodes(tape, mut, in);
  Value spe = spe_matrix(tape, mut, in, policy);
  EmbedResult out;
  out.x = tape.data(x);
  out.spe = blocks_from_matrix(tape.data(spe), in.m, in.n, policy);
  return out;
}

Tensor encode_forward(const EncoderWeights &enc, const LevelInputs &in,
                      MaskPolicy policy) {
  EncoderWeights &mut = const_cast<EncoderWeights &>(enc);
  Tape tape;
  return tape.data(encode_level(tape, mut, in, policy));
}

Tensor biased_attention(const Tensor &x, const Tensor &wq, const Tensor &wk,
                        const Tensor &bias) {
  Tape tape;
  Value xv = tape.constant(x);
  Value q = tape.matmul(xv, tape.constant(wq));
  Value k = tape.matmul(xv, tape.constant(wk));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(wq.cols));
  Value scores = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt);
  return tape.data(tape.softmax_rows(tape.add(scores, tape.constant(bias))));
}

Value predict_pairs(Tape &tape, DistanceHead &head, Value h,
                    const std::vector<std::pair<int, int>> &pairs) {
  std::vector<int> left, right;
  left.reserve(pairs.size());
  right.reserve(pairs.size());
  for (const auto &pr : pairs) {
    left.push_back(pr.first);
    right.push_back(pr.second);
  }
  Value hi = tape.gather_rows(h, left);
  Value hj = tape.gather_rows(h, right);
  auto mlp = [&](Value a, Value b) {
    Value feat = tape.concat_cols(tape.concat_cols(a, b), tape.mul(a, b));
    Value hidden = tape.relu(
        tape.add_rows(tape.matmul(feat, tape.leaf(head.w1)), tape.leaf(head.b1)));
    return tape.softplus(
        tape.add_rows(tape.matmul(hidden, tape.leaf(head.w2)), tape.leaf(head.b2)));
  };
  return tape.scale(tape.add(mlp(hi, hj), mlp(hj, hi)), 0.5);
}

double predict_distance(const DistanceHead &head, const std::vector<double> &hi,
                        const std::vector<double> &hj) {
  if (hi.size() != hj.size() || hi.empty())
    throw ShapeError("predict_distance: node states must share a nonzero length");
  DistanceHead &mut = const_cast<DistanceHead &>(head);
  Tape tape;
  Tensor h(2, static_cast<int>(hi.size()));
  for (std::size_t k = 0; k < hi.size(); ++k) {
    h.at(0, static_cast<int>(k)) = hi[k];
    h.at(1, static_cast<int>(k)) = hj[k];
  }
  Value pred = predict_pairs(tape, mut, tape.constant(std::move(h)), {{0, 1}});
  return tape.data(pred).item();
}

// ---------------------------------------------------------------------------
// Whole model.
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (layers < 0) throw ConfigError("model.layers must be nonnegative");
  if (heads < 1) throw ConfigError("model.heads must be positive");
  if (d_model < 1) throw ConfigError("model.d_model must be positive");
  if (d_model % heads != 0) throw ConfigError("model.d_model must be divisible by model.heads");
  if (kernels < 2) throw ConfigError("model.kernels must be at least 2");
  if (!(mu_max > 0.0)) throw ConfigError("spe.mu_max must be positive");
  if (!(sigma_scale > 0.0)) throw ConfigError("spe.sigma_scale must be positive");
}

Model::Model(const ModelConfig &cfg, Rng &rng) : config(cfg) {
  cfg.validate();
  atom_encoder =
      make_encoder("atom", kAtomClassCount, kAtomPairTypeCount, cfg.layers, cfg.heads,
                   cfg.d_model, cfg.kernels, cfg.mu_max, false, rng, cfg.sigma_scale);
  motif_encoder =
      make_encoder("motif", kAtomClassCount, kMotifPairTypeCount, cfg.layers, cfg.heads,
                   cfg.d_model, cfg.kernels, cfg.mu_max, false, rng, cfg.sigma_scale);
  cond_encoder =
      make_encoder("cond", kAtomClassCount, kAtomPairTypeCount, cfg.layers, cfg.heads,
                   cfg.d_model, cfg.kernels, cfg.mu_max, true, rng, cfg.sigma_scale);
  cond_encoder.prior_enabled = cfg.prior_enabled;
  atom_head = DistanceHead("atom.dist", cfg.d_model, rng);
  motif_head = DistanceHead("motif.dist", cfg.d_model, rng);
  cond_head = DistanceHead("cond.dist", cfg.d_model, rng);
  affinity_w = Parameter("affinity.w", Tensor::zeros(6 * cfg.d_model, 1));
  affinity_b = Parameter("affinity.b", Tensor::zeros(1, 1));
}

std::vector<Parameter *> Model::parameters() {
  std::vector<Parameter *> out;
  atom_encoder.collect(out);
  motif_encoder.collect(out);
  cond_encoder.collect(out);
  atom_head.collect(out);
  motif_head.collect(out);
  cond_head.collect(out);
  out.push_back(&affinity_w);
  out.push_back(&affinity_b);
  return out;
}

}  // namespace cpiformer
