#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pscape/diffusion_ops.hpp"
#include "pscape/graph_builder.hpp"
#include "pscape/linalg.hpp"
#include "pscape/model.hpp"
#include "pscape/autodiff.hpp"
#include "pscape/rng.hpp"
#include "pscape/trajectory_io.hpp"

namespace testing_support {

using pscape::Matrix;

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, pscape::Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, scale);
  return m;
}

inline pscape::ProteinGraph path_graph(int n) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return pscape::graph_from_adjacency(a, pscape::one_hot(pscape::round_robin_sequence(static_cast<std::size_t>(n))));
}

inline pscape::ProteinGraph complete_graph(int n) {
  Matrix a = Matrix::Ones(n, n) - Matrix::Identity(n, n);
  return pscape::graph_from_adjacency(a, pscape::one_hot(pscape::round_robin_sequence(static_cast<std::size_t>(n))));
}

/// Connected random graph from a random chain's k-NN.
inline pscape::ProteinGraph random_graph(int n, pscape::Rng& rng, int k = 4) {
  return pscape::random_chain_graph(n, k, rng);
}

/// Relative error ||a - b|| / max(||a||, ||b||, tiny).
inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double den = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / den;
}

/// Small hinge trajectory for model tests.
inline pscape::Trajectory toy_hinge(int n_per_arm, int frames, std::uint64_t seed) {
  pscape::HingeParams p;
  p.n_per_arm = n_per_arm;
  p.n_frames = frames;
  p.seed = seed;
  return pscape::synth_hinge(p);
}

inline pscape::ModelConfig toy_config(int n) {
  pscape::ModelConfig c;
  c.n = n;
  c.k = 3;
  c.J = 2;
  c.t_max = 4;
  c.latent_dim = 4;
  c.heads = 2;
  c.head_dim = 3;
  c.hidden = 6;
  c.attn_hidden = 5;
  c.residue_out = 2;
  c.aa_out = 2;
  c.embed_hidden = 4;
  return c;
}


inline double total_loss(const pscape::ModelParams& params, const pscape::PreparedBatch& batch) {
  pscape::ad::Tape tape;
  const pscape::ParamVars vars(tape, params, false);
  return pscape::loss(pscape::forward(vars, params.config, batch), params, batch).total.scalar();
}

/// Central-difference check of the full loss gradient over every parameter
/// entry: ||g_fd - g|| / max(||g_fd||, ||g||) with both gradients flattened
/// across all tensors.
inline double model_grad_error(const pscape::ModelParams& params, const pscape::PreparedBatch& batch, double h) {
  std::vector<double> analytic, numeric;
  {
    pscape::ad::Tape tape;
    const pscape::ParamVars vars(tape, params, true);
    const auto l = pscape::loss(pscape::forward(vars, params.config, batch), params, batch);
    tape.backward(l.total);
    for (const auto& [name, v] : vars.all()) analytic.insert(analytic.end(), v.grad().data(), v.grad().data() + v.grad().size());
  }
  pscape::ModelParams probe = params;
  for (auto& [name, m] : probe.tensors)
    for (Eigen::Index e = 0; e < m.size(); ++e) {
      const double keep = m.data()[e];
      m.data()[e] = keep + h;
      const double up = total_loss(probe, batch);
      m.data()[e] = keep - h;
      const double down = total_loss(probe, batch);
      m.data()[e] = keep;
      numeric.push_back((up - down) / (2.0 * h));
    }
  const auto a = Eigen::Map<const Eigen::VectorXd>(analytic.data(), static_cast<Eigen::Index>(analytic.size()));
  const auto f = Eigen::Map<const Eigen::VectorXd>(numeric.data(), static_cast<Eigen::Index>(numeric.size()));
  return (f - a).norm() / std::max({f.norm(), a.norm(), 1e-300});
}

} // namespace testing_support
