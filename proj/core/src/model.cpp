#include "pscape/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pscape/diffusion_ops.hpp"
#include "pscape/error.hpp"
#include "pscape/parallel.hpp"
#include "pscape/scattering.hpp"

namespace pscape {

int ModelConfig::features() const { return channels() * features_per_channel(J); }

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ArgumentError("model config: " + what); };
  if (n < 4) fail("n must be >= 4");
  if (k < 1 || k >= n) fail("k must satisfy 1 <= k < n");
  if (J < 1) fail("J must be >= 1");
  if (t_max < J + 1) fail("t_max must be >= J+1");
  if (latent_dim < 1 || heads < 1 || head_dim < 1 || hidden < 1 || attn_hidden < 1 || residue_out < 1 || aa_out < 1 ||
      embed_hidden < 1)
    fail("layer sizes must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) fail("loss weights must be non-negative");
  const double used = alpha + beta + (node_embedding ? gamma : 0.0);
  if (used > 1.0 + 1e-12) fail("loss weights must sum to at most 1");
}

ModelConfig::Weights ModelConfig::loss_weights() const {
  validate();
  Weights w{alpha, beta, 0.0, 0.0};
  if (plus_beta_structure) {
    w.structure = 1.0 - alpha + beta;
    if (node_embedding) w.node = gamma;
  } else if (node_embedding) {
    w.node = gamma;
    w.structure = 1.0 - alpha - beta - gamma;
  } else {
    w.structure = 1.0 - alpha - beta;
  }
  return w;
}

Matrix& ModelParams::at(std::string_view name) {
  for (auto& [k, v] : tensors)
    if (k == name) return v;
  throw ArgumentError("unknown parameter tensor '" + std::string(name) + "'");
}

const Matrix& ModelParams::at(std::string_view name) const {
  for (const auto& [k, v] : tensors)
    if (k == name) return v;
  throw ArgumentError("unknown parameter tensor '" + std::string(name) + "'");
}

bool ModelParams::has(std::string_view name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const auto& kv) { return kv.first == name; });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& kv : tensors) total += static_cast<std::size_t>(kv.second.size());
  return total;
}

namespace {

struct Shape {
  std::string name;
  Eigen::Index rows, cols;
  Eigen::Index fan_in;
};

std::vector<Shape> parameter_shapes(const ModelConfig& c) {
  const Eigen::Index F = c.features();
  const Eigen::Index K = features_per_channel(c.J);
  const Eigen::Index C = c.channels();
  const Eigen::Index hd = static_cast<Eigen::Index>(c.heads) * c.head_dim;
  std::vector<Shape> s;
  s.push_back({"theta", c.J + 1, c.t_max, 0});
  auto dense = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    s.push_back({name + ".w", in, out, in});
    s.push_back({name + ".b", 1, out, in});
  };
  auto attention = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    s.push_back({name + ".wq", in, hd, in});
    s.push_back({name + ".wk", in, hd, in});
    s.push_back({name + ".wv", in, hd, in});
    s.push_back({name + ".wo", hd, hd, hd});
    dense(name + ".mlp1", hd, c.attn_hidden);
    dense(name + ".mlp2", c.attn_hidden, out);
  };
  auto mlp = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    dense(name + ".1", in, c.hidden);
    dense(name + ".2", c.hidden, out);
  };
  if (c.node_embedding) {
    dense("embed.1", kAlphabetSize, c.embed_hidden);
    dense("embed.2", c.embed_hidden, 3);
    dense("unembed.1", 3, c.embed_hidden);
    dense("unembed.2", c.embed_hidden, kAlphabetSize);
  }
  attention("res", 3 * F, c.residue_out);
  attention("aa", static_cast<Eigen::Index>(c.n) * K, c.aa_out);
  const Eigen::Index p_dim = static_cast<Eigen::Index>(c.n) * c.residue_out + C * c.aa_out;
  mlp("enc", p_dim, c.latent_dim);
  mlp("time", c.latent_dim, 1);
  mlp("struct", c.latent_dim, c.n_pairs() + c.n_dihedral_pairs());
  mlp("dec", c.latent_dim, static_cast<Eigen::Index>(c.n) * F);
  if (c.coord_head) mlp("coord", c.latent_dim, 3 * static_cast<Eigen::Index>(c.n));
  return s;
}

} // namespace

void validate_params(const ModelParams& params) {
  params.config.validate();
  const auto shapes = parameter_shapes(params.config);
  if (shapes.size() != params.tensors.size())
    throw ShapeError("parameters: expected " + std::to_string(shapes.size()) + " tensors, got " +
                     std::to_string(params.tensors.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& [name, m] = params.tensors[i];
    if (name != shapes[i].name || m.rows() != shapes[i].rows || m.cols() != shapes[i].cols)
      throw ShapeError("parameters: tensor '" + name + "' does not match the config (expected '" + shapes[i].name +
                       "' " + std::to_string(shapes[i].rows) + "x" + std::to_string(shapes[i].cols) + ")");
    if (!m.allFinite()) throw ArgumentError("parameters: tensor '" + name + "' has non-finite entries");
  }
  if (params.norm.pd_mean.size() != params.config.n_pairs())
    throw ShapeError("parameters: normalization does not match the config");
}

ModelParams init_params(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelParams params;
  params.config = config;
  for (const auto& sh : parameter_shapes(config)) {
    Matrix m;
    if (sh.name == "theta") {
      m = initial_selection(config.J, config.t_max);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sh.fan_in));
      m.resize(sh.rows, sh.cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    }
    params.tensors.emplace_back(sh.name, std::move(m));
  }
  return params;
}

// ---------------------------------------------------------------------------

PreparedBatch prepare_frames(const Trajectory& traj, std::span<const int> frame_indices, const ModelConfig& config) {
  if (frame_indices.empty()) throw ArgumentError("prepare_frames: no frames selected");
  if (static_cast<int>(traj.residues()) != config.n)
    throw ShapeError("prepare_frames: trajectory has " + std::to_string(traj.residues()) + " residues, model expects " +
                     std::to_string(config.n));
  PreparedBatch b;
  b.frames = static_cast<int>(frame_indices.size());
  b.n = config.n;
  b.onehot = one_hot(traj.sequence());
  b.t.resize(frame_indices.size());
  b.targets.resize(frame_indices.size());
  b.coords.resize(frame_indices.size());
  const Eigen::Index nn = static_cast<Eigen::Index>(config.n) * config.n;
  b.power_table.resize(config.t_max, b.frames * nn);
  parallel_for(frame_indices.size(), worker_count(), [&](std::size_t f) {
    const int idx = frame_indices[f];
    if (idx < 0 || idx >= static_cast<int>(traj.frames.size())) throw ArgumentError("prepare_frames: frame index out of range");
    const auto& frame = traj.frames[static_cast<std::size_t>(idx)];
    const ProteinGraph g = build_knn_graph(frame, config.k);
    const Matrix p = lazy_walk(g.adjacency, g.degree);
    Matrix pw = p;
    for (int t = 1; t <= config.t_max; ++t) {
      if (t > 1) pw = pw * p;
      b.power_table.block(t - 1, static_cast<Eigen::Index>(f) * nn, 1, nn) =
          Eigen::Map<const Eigen::RowVectorXd>(pw.data(), nn);
    }
    b.t[f] = frame.t;
    b.targets[f] = structure_targets(frame);
    b.coords[f] = frame.coords.rowwise() - frame.coords.colwise().mean();
  });
  return b;
}

Normalization fit_normalization(const Trajectory& traj, std::span<const int> frame_indices) {
  if (frame_indices.empty()) throw ArgumentError("fit_normalization: no frames selected");
  Normalization norm;
  const auto n = static_cast<Eigen::Index>(traj.residues());
  const Eigen::Index m = n * (n - 1) / 2;
  Matrix pd(static_cast<Eigen::Index>(frame_indices.size()), m);
  double lo = 0.0, hi = 0.0;
  for (std::size_t f = 0; f < frame_indices.size(); ++f) {
    const auto& frame = traj.frames.at(static_cast<std::size_t>(frame_indices[f]));
    pd.row(static_cast<Eigen::Index>(f)) = upper_triangle(pairwise_distances(frame.coords));
    const double t = static_cast<double>(frame.t);
    lo = f == 0 ? t : std::min(lo, t);
    hi = f == 0 ? t : std::max(hi, t);
  }
  norm.t_lo = lo;
  norm.t_hi = hi > lo ? hi : lo + 1.0;
  norm.pd_mean = pd.colwise().mean();
  const Matrix centered = pd.rowwise() - norm.pd_mean;
  const Eigen::RowVectorXd sd = (centered.cwiseProduct(centered).colwise().sum() / static_cast<double>(pd.rows())).cwiseSqrt();
  norm.pd_scale = sd.mean() > 1e-12 ? sd.mean() : 1.0;
  return norm;
}

// ---------------------------------------------------------------------------

ParamVars::ParamVars(ad::Tape& tape, const ModelParams& params, bool trainable) {
  for (const auto& [name, m] : params.tensors) vars_.emplace_back(name, trainable ? tape.leaf(m) : tape.constant(m));
}

ad::Var ParamVars::operator[](std::string_view name) const {
  for (const auto& [k, v] : vars_)
    if (k == name) return v;
  throw ArgumentError("unknown parameter tensor '" + std::string(name) + "'");
}

namespace {

ad::Var dense(const ParamVars& v, const std::string& name, ad::Var x) {
  return ad::add_row(ad::matmul(x, v[name + ".w"]), v[name + ".b"]);
}

ad::Var mlp(const ParamVars& v, const std::string& name, ad::Var x) {
  return dense(v, name + ".2", ad::relu(dense(v, name + ".1", x)));
}

AttentionWeights attention_weights(const ParamVars& v, const std::string& name, int heads) {
  return {v[name + ".wq"],     v[name + ".wk"],     v[name + ".wv"],     v[name + ".wo"],
          v[name + ".mlp1.w"], v[name + ".mlp1.b"], v[name + ".mlp2.w"], v[name + ".mlp2.b"], heads};
}

} // namespace

AttentionOutput attention_from_projections(ad::Var q, ad::Var k, ad::Var v, const AttentionWeights& w,
                                           Eigen::Index blocks) {
  if (w.heads < 1 || q.cols() % w.heads != 0 || k.cols() != q.cols() || v.cols() % w.heads != 0)
    throw ShapeError("attention: projection widths do not split into heads");
  const Eigen::Index dk = q.cols() / w.heads;
  const Eigen::Index dv = v.cols() / w.heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
  AttentionOutput out;
  std::vector<ad::Var> heads;
  for (int h = 0; h < w.heads; ++h) {
    ad::Var qh = ad::slice_cols(q, h * dk, dk);
    ad::Var kh = ad::slice_cols(k, h * dk, dk);
    ad::Var vh = ad::slice_cols(v, h * dv, dv);
    ad::Var a = ad::block_softmax_cols(ad::scale(ad::block_matmul_nt(qh, kh, blocks), inv), blocks);
    out.attention.push_back(a);
    heads.push_back(ad::block_matmul(a, vh, blocks));
  }
  ad::Var mixed = ad::matmul(heads.size() == 1 ? heads[0] : ad::hconcat(heads), w.wo);
  ad::Var hidden = ad::relu(ad::add_row(ad::matmul(mixed, w.w1), w.b1));
  out.out = ad::add_row(ad::matmul(hidden, w.w2), w.b2);
  return out;
}

AttentionOutput attention_block(ad::Var s, const AttentionWeights& w, Eigen::Index blocks) {
  if (s.cols() != w.wq.rows()) throw ShapeError("attention: input width does not match W^Q");
  return attention_from_projections(ad::matmul(s, w.wq), ad::matmul(s, w.wk), ad::matmul(s, w.wv), w, blocks);
}

ForwardResult forward(const ParamVars& v, const ModelConfig& c, const PreparedBatch& batch) {
  if (batch.n != c.n) throw ShapeError("forward: batch residue count does not match the model");
  if (batch.power_table.rows() != c.t_max) throw ShapeError("forward: power table depth does not match t_max");
  ad::Tape& tape = *v["theta"].tape();
  const Eigen::Index B = batch.frames;
  const Eigen::Index n = c.n;
  const Eigen::Index F = c.features();
  const Eigen::Index K = features_per_channel(c.J);
  const Eigen::Index C = c.channels();
  ForwardResult r;

  ad::Var x;
  if (c.node_embedding) {
    ad::Var onehot = tape.constant(batch.onehot);
    ad::Var e = mlp(v, "embed", onehot);
    r.onehot_recon = mlp(v, "unembed", e);
    x = ad::tile_rows(e, B);
  } else {
    x = tape.constant(batch.onehot.replicate(B, 1));
  }

  ad::Var table = tape.constant(batch.power_table);
  const auto soft = soft_scale_operators(v["theta"], table, B, n);
  r.features = scatter_batched(soft, x, B);

  // Residue transformer on S = R || U x; the R rows of each projection are
  // shared by every frame.
  ad::Var pe = tape.constant(positional_encoding(n, F));
  auto project = [&](const char* which) {
    ad::Var w = v[std::string("res.") + which];
    ad::Var pos = ad::tile_rows(ad::matmul(pe, ad::slice_rows(w, 0, 2 * F)), B);
    return ad::add(pos, ad::matmul(r.features, ad::slice_rows(w, 2 * F, F)));
  };
  const AttentionWeights wres = attention_weights(v, "res", c.heads);
  AttentionOutput res = attention_from_projections(project("wq"), project("wk"), project("wv"), wres, B);
  r.residue_attention = res.attention;

  // Amino-acid transformer: one token per channel, features = that channel's
  // coefficients over all residues.
  ad::Var tokens = ad::reshape(ad::block_transpose(r.features, B), B * C, K * n);
  AttentionOutput aa = attention_block(tokens, attention_weights(v, "aa", c.heads), B);
  r.aa_attention = aa.attention;

  const std::vector<ad::Var> parts{ad::reshape(res.out, B, n * c.residue_out), ad::reshape(aa.out, B, C * c.aa_out)};
  r.p = ad::hconcat(parts);
  r.z = mlp(v, "enc", r.p);
  r.t_hat = mlp(v, "time", r.z);
  ad::Var s = mlp(v, "struct", r.z);
  r.pd_hat = ad::slice_cols(s, 0, c.n_pairs());
  r.dih_hat = ad::slice_cols(s, c.n_pairs(), c.n_dihedral_pairs());
  r.recon = ad::reshape(mlp(v, "dec", r.z), B * n, F);
  if (c.coord_head) r.coords_hat = mlp(v, "coord", r.z);
  return r;
}

LossTerms LossNodes::values() const {
  LossTerms t;
  t.total = total.scalar();
  t.time = time.scalar();
  t.structure = structure.scalar();
  t.scattering = scattering.scalar();
  t.node = node.valid() ? node.scalar() : 0.0;
  return t;
}

LossNodes loss(const ForwardResult& out, const ModelParams& params, const PreparedBatch& batch) {
  const ModelConfig& c = params.config;
  const auto w = c.loss_weights();
  const Normalization& norm = params.norm;
  if (norm.pd_mean.size() != c.n_pairs()) throw ShapeError("loss: normalization does not match the model");
  ad::Tape& tape = *out.z.tape();
  const Eigen::Index B = batch.frames;

  Matrix t_target(B, 1);
  Matrix pd_target(B, c.n_pairs());
  Matrix dih_target(B, c.n_dihedral_pairs());
  for (Eigen::Index f = 0; f < B; ++f) {
    t_target(f, 0) = (static_cast<double>(batch.t[f]) - norm.t_lo) / (norm.t_hi - norm.t_lo);
    pd_target.row(f) = (upper_triangle(batch.targets[f].pairdist) - norm.pd_mean) / norm.pd_scale;
    dih_target.row(f) = upper_triangle(batch.targets[f].dihedral_diff);
  }

  LossNodes l;
  l.time = ad::mse(out.t_hat, tape.constant(std::move(t_target)));
  ad::Var pd = ad::mse(out.pd_hat, tape.constant(std::move(pd_target)));
  ad::Var dih = c.n_dihedral_pairs() > 0 ? ad::mse(out.dih_hat, tape.constant(std::move(dih_target)))
                                         : tape.constant(Matrix::Zero(1, 1));
  l.structure = ad::add(ad::scale(pd, 0.5), ad::scale(dih, 0.5));
  if (c.coord_head) {
    Matrix coords_target(B, 3 * c.n);
    for (Eigen::Index f = 0; f < B; ++f)
      coords_target.row(f) = Eigen::Map<const Eigen::RowVectorXd>(batch.coords[f].data(), 3 * c.n) / norm.pd_scale;
    l.structure = ad::add(l.structure, ad::scale(ad::mse(out.coords_hat, tape.constant(std::move(coords_target))), 0.5));
  }
  l.scattering = ad::mse(out.recon, out.features);
  l.total = ad::add(ad::add(ad::scale(l.time, w.time), ad::scale(l.scattering, w.scattering)),
                    ad::scale(l.structure, w.structure));
  if (c.node_embedding) {
    l.node = ad::mse(out.onehot_recon, tape.constant(batch.onehot));
    l.total = ad::add(l.total, ad::scale(l.node, w.node));
  }
  return l;
}

// ---------------------------------------------------------------------------

DecodedStructure decode_latent(const ModelParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  const ModelConfig& c = params.config;
  if (z.size() != c.latent_dim) throw ShapeError("decode_latent: latent has the wrong dimension");
  ad::Tape tape;
  ParamVars v(tape, params, false);
  ad::Var zv = tape.constant(Matrix(z));
  const Matrix s = mlp(v, "struct", zv).value();
  DecodedStructure d;
  const Eigen::RowVectorXd pd = s.leftCols(c.n_pairs()).row(0) * params.norm.pd_scale + params.norm.pd_mean;
  d.pairdist = symmetric_from_upper(pd, c.n);
  d.dihedral_diff = antisymmetric_from_upper(s.rightCols(c.n_dihedral_pairs()).row(0), c.n - 3);
  if (c.coord_head) {
    const Matrix flat = mlp(v, "coord", zv).value() * params.norm.pd_scale;
    d.coords = Matrix(Eigen::Map<const Matrix>(flat.data(), c.n, 3));
  }
  return d;
}

Embedding embed(const ModelParams& params, const Trajectory& traj, std::span<const int> frame_indices) {
  const ModelConfig& c = params.config;
  const auto count = static_cast<Eigen::Index>(frame_indices.size());
  Embedding e;
  e.z.resize(count, c.latent_dim);
  e.t_hat.resize(count);
  e.residue_scores.resize(count, c.n);
  e.features.resize(count, static_cast<Eigen::Index>(c.n) * c.features());
  constexpr std::size_t chunk = 64;
  for (std::size_t start = 0; start < frame_indices.size(); start += chunk) {
    const auto len = std::min(chunk, frame_indices.size() - start);
    const auto part = frame_indices.subspan(start, len);
    const PreparedBatch batch = prepare_frames(traj, part, c);
    ad::Tape tape;
    ParamVars v(tape, params, false);
    const ForwardResult out = forward(v, c, batch);
    const auto row0 = static_cast<Eigen::Index>(start);
    e.z.middleRows(row0, static_cast<Eigen::Index>(len)) = out.z.value();
    for (std::size_t f = 0; f < len; ++f) {
      e.t_hat(row0 + static_cast<Eigen::Index>(f)) =
          params.norm.t_lo + out.t_hat.value()(static_cast<Eigen::Index>(f), 0) * (params.norm.t_hi - params.norm.t_lo);
      e.t.push_back(batch.t[f]);
      const Matrix block = out.features.value().middleRows(static_cast<Eigen::Index>(f) * c.n, c.n);
      e.features.row(row0 + static_cast<Eigen::Index>(f)) =
          Eigen::Map<const Eigen::RowVectorXd>(block.data(), block.size());
      Eigen::RowVectorXd score = Eigen::RowVectorXd::Zero(c.n);
      for (const auto& a : out.residue_attention)
        score += a.value().middleRows(static_cast<Eigen::Index>(f) * c.n, c.n).rowwise().mean().transpose();
      e.residue_scores.row(row0 + static_cast<Eigen::Index>(f)) = score / static_cast<double>(out.residue_attention.size());
    }
  }
  return e;
}

} // namespace pscape
