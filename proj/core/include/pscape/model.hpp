#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pscape/autodiff.hpp"
#include "pscape/graph_builder.hpp"
#include "pscape/linalg.hpp"
#include "pscape/rng.hpp"
#include "pscape/structure.hpp"
#include "pscape/trajectory_io.hpp"

namespace pscape {

struct ModelConfig {
  int n = 0;          // residues
  int k = 5;          // k-NN graph
  int J = 4;
  int t_max = 16;
  int latent_dim = 32;
  int heads = 4;
  int head_dim = 16;
  int hidden = 128;      // encoder / decoder / regressor MLPs
  int attn_hidden = 32;  // MLP after each attention block
  int residue_out = 16;  // per-residue width of the residue transformer output
  int aa_out = 8;        // per-token width of the amino-acid transformer output
  int embed_hidden = 16; // node-embedding autoencoder
  bool node_embedding = false;
  bool coord_head = false;
  double alpha = 0.1;
  double beta = 0.1;
  double gamma = 0.1;
  bool plus_beta_structure = false; // structure weight 1 - alpha + beta instead of 1 - alpha - beta

  /// Signal channels fed to scattering: 20 one-hot columns, or 3 in
  /// node-embedding mode.
  int channels() const noexcept { return node_embedding ? 3 : kAlphabetSize; }
  int features() const;
  int n_pairs() const noexcept { return n * (n - 1) / 2; }
  int n_dihedral_pairs() const noexcept { return (n - 3) * (n - 4) / 2; }

  /// Throws ArgumentError on any out-of-range field, including loss weights.
  void validate() const;

  /// Loss weights (time, scattering, structure, node).
  struct Weights {
    double time, scattering, structure, node;
  };
  Weights loss_weights() const;
};

/// Node-embedding mode is switched on automatically above this residue count.
inline constexpr int kNodeEmbeddingThreshold = 200;

/// Target normalization fitted on the training frames and stored with the
/// parameters.
struct Normalization {
  double t_lo = 0.0;
  double t_hi = 1.0;
  Eigen::RowVectorXd pd_mean; // per upper-triangle entry
  double pd_scale = 1.0;      // mean per-entry standard deviation
};

struct ModelParams {
  ModelConfig config;
  Normalization norm;
  std::vector<std::pair<std::string, Matrix>> tensors;

  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  bool has(std::string_view name) const;
  std::size_t parameter_count() const;
};

/// Throws ShapeError when tensor names, order or shapes do not match the
/// config, or ArgumentError on non-finite values.
void validate_params(const ModelParams& params);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights; selection logits peaked
/// at dyadic scales.
ModelParams init_params(const ModelConfig& config, Rng& rng);

/// Graph operators and signals for a set of frames, independent of params.
struct PreparedBatch {
  int frames = 0;
  int n = 0;
  Matrix power_table;             // t_max x frames*n*n
  Matrix onehot;                  // n x 20 (shared sequence)
  std::vector<std::int64_t> t;    // frame indices
  std::vector<StructureTargets> targets;
  std::vector<Matrix> coords;     // centered residue centers
};

/// Builds k-NN graphs and diffusion powers; frame-parallel up to
/// `worker_count()` threads.
PreparedBatch prepare_frames(const Trajectory& traj, std::span<const int> frame_indices, const ModelConfig& config);

// ---------------------------------------------------------------------------

/// Tape handles for every parameter tensor, by name.
class ParamVars {
public:
  /// `trainable` selects leaves (gradients wanted) over constants.
  ParamVars(ad::Tape& tape, const ModelParams& params, bool trainable);
  ad::Var operator[](std::string_view name) const;
  const std::vector<std::pair<std::string, ad::Var>>& all() const { return vars_; }

private:
  std::vector<std::pair<std::string, ad::Var>> vars_;
};

struct AttentionWeights {
  ad::Var wq, wk, wv, wo, w1, b1, w2, b2;
  int heads = 1;
};

struct AttentionOutput {
  ad::Var out;                     // (blocks*tokens) x out width
  std::vector<ad::Var> attention;  // per head, (blocks*tokens) x tokens, columns sum to 1 per block
};

/// Multi-head attention over the rows of each block of s, then a two-layer
/// ReLU MLP: per head A = colsoftmax(Q K^T / sqrt(d_k)), heads concatenated
/// and mixed by wo.
AttentionOutput attention_block(ad::Var s, const AttentionWeights& w, Eigen::Index blocks);

/// Same, with the three projections supplied by the caller.
AttentionOutput attention_from_projections(ad::Var q, ad::Var k, ad::Var v, const AttentionWeights& w,
                                           Eigen::Index blocks);

struct ForwardResult {
  ad::Var features;   // scattering coefficients, (B*n) x F
  ad::Var p;          // B x p_dim
  ad::Var z;          // B x latent
  ad::Var t_hat;      // B x 1, normalized time
  ad::Var pd_hat;     // B x n_pairs, normalized
  ad::Var dih_hat;    // B x n_dihedral_pairs, radians
  ad::Var recon;      // (B*n) x F
  ad::Var coords_hat; // B x 3n when the coordinate head is on
  ad::Var onehot_recon; // n x 20 in node-embedding mode
  std::vector<ad::Var> residue_attention;
  std::vector<ad::Var> aa_attention;
};

ForwardResult forward(const ParamVars& vars, const ModelConfig& config, const PreparedBatch& batch);

struct LossTerms {
  double total = 0.0;
  double time = 0.0;
  double structure = 0.0;
  double scattering = 0.0;
  double node = 0.0;
};

struct LossNodes {
  ad::Var total, time, structure, scattering, node;
  LossTerms values() const;
};

LossNodes loss(const ForwardResult& out, const ModelParams& params, const PreparedBatch& batch);

/// Decoded geometry in original units.
struct DecodedStructure {
  Matrix pairdist;
  Matrix dihedral_diff;
  std::optional<Matrix> coords;
};

DecodedStructure decode_latent(const ModelParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& z);

/// Latent codes and predicted times for the given frames (chunked forward).
struct Embedding {
  Matrix z;                    // frames x latent
  Eigen::VectorXd t_hat;       // un-normalized
  std::vector<std::int64_t> t;
  Matrix residue_scores;       // frames x n, head-averaged attention mass
  Matrix features;             // frames x n*F, flattened scattering coefficients
};

Embedding embed(const ModelParams& params, const Trajectory& traj, std::span<const int> frame_indices);

/// Fits time and pairwise-distance normalization on the given frames.
Normalization fit_normalization(const Trajectory& traj, std::span<const int> frame_indices);

} // namespace pscape
