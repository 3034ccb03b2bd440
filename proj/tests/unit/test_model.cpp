#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "../support.hpp"
#include "pscape/checkpoint.hpp"
#include "pscape/error.hpp"
#include "pscape/model.hpp"
#include "pscape/structure.hpp"

using namespace pscape;
using namespace testing_support;

namespace {

ModelParams toy_params(const Trajectory& traj, std::uint64_t seed, ModelConfig c) {
  Rng rng(seed);
  ModelParams p = init_params(c, rng);
  std::vector<int> all(traj.frames.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  p.norm = fit_normalization(traj, all);
  return p;
}

} // namespace

TEST_CASE("planar trans quadruple has dihedral pi") {
  const Eigen::RowVector3d a(0, 0, 0), b(1, 0, 0), c(1, 1, 0), d(2, 1, 0);
  CHECK(std::abs(dihedral(a, b, c, d)) == doctest::Approx(std::numbers::pi).epsilon(1e-14));
  const Eigen::RowVector3d cis(0, 1, 0);
  CHECK(dihedral(a, b, c, cis) == doctest::Approx(0.0));
  bool degenerate = false;
  CHECK(dihedral(a, b, Eigen::RowVector3d(2, 0, 0), d, &degenerate) == 0.0);
  CHECK(degenerate);
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3.0 * std::numbers::pi / 2.0) == doctest::Approx(-std::numbers::pi / 2.0));
  CHECK(wrap_angle(0.25) == 0.25);
}

TEST_CASE("positional encoding d=1, i=1") {
  const Matrix pe = positional_encoding(2, 1);
  REQUIRE(pe.cols() == 2);
  CHECK(pe(0, 0) == 0.0);
  CHECK(pe(0, 1) == 1.0);
  CHECK(pe(1, 0) == doctest::Approx(std::sin(1.0 / 1e8)).epsilon(1e-15));
  CHECK(pe(1, 1) == doctest::Approx(std::cos(1.0 / 1e8)).epsilon(1e-15));
}

TEST_CASE("structure targets") {
  const Trajectory traj = toy_hinge(3, 4, 1);
  const StructureTargets s = structure_targets(traj.frames[0]);
  CHECK((s.pairdist - s.pairdist.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.pairdist.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.pairdist(0, 5) == doctest::Approx((traj.frames[0].coords.row(0) - traj.frames[0].coords.row(5)).norm()));
  CHECK(s.dihedrals.size() == 3);
  CHECK((s.dihedral_diff + s.dihedral_diff.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(s.dihedral_diff(0, 1) == doctest::Approx(wrap_angle(s.dihedrals(0) - s.dihedrals(1))));
  const auto up = upper_triangle(s.pairdist);
  CHECK(up.size() == 15);
  CHECK((symmetric_from_upper(up, 6) - s.pairdist).cwiseAbs().maxCoeff() == 0.0);
  CHECK((antisymmetric_from_upper(upper_triangle(s.dihedral_diff), 3) - s.dihedral_diff).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config validation and loss weights") {
  ModelConfig c = toy_config(6);
  CHECK_NOTHROW(c.validate());
  auto w = c.loss_weights();
  CHECK(w.structure == doctest::Approx(0.8));
  c.plus_beta_structure = true;
  CHECK(c.loss_weights().structure == doctest::Approx(1.0));
  c.plus_beta_structure = false;
  c.node_embedding = true;
  w = c.loss_weights();
  CHECK(w.node == doctest::Approx(0.1));
  CHECK(w.structure == doctest::Approx(0.7));
  c.alpha = 0.6;
  c.beta = 0.5;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = toy_config(6);
  c.k = 6;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = toy_config(6);
  c.t_max = 2;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("forward shapes and attention normalization") {
  const Trajectory traj = toy_hinge(3, 6, 2);
  for (bool node : {false, true})
    for (bool coord : {false, true}) {
      ModelConfig c = toy_config(6);
      c.node_embedding = node;
      c.coord_head = coord;
      const ModelParams params = toy_params(traj, 3, c);
      CHECK_NOTHROW(validate_params(params));
      const std::vector<int> frames{0, 2, 4};
      const PreparedBatch batch = prepare_frames(traj, frames, c);
      ad::Tape tape;
      const ParamVars vars(tape, params, false);
      const ForwardResult out = forward(vars, c, batch);
      CHECK(out.features.rows() == 18);
      CHECK(out.features.cols() == c.features());
      CHECK(out.z.rows() == 3);
      CHECK(out.z.cols() == c.latent_dim);
      CHECK(out.t_hat.rows() == 3);
      CHECK(out.pd_hat.cols() == c.n_pairs());
      CHECK(out.dih_hat.cols() == c.n_dihedral_pairs());
      CHECK(out.recon.rows() == 18);
      CHECK(out.coords_hat.valid() == coord);
      CHECK(out.onehot_recon.valid() == node);
      REQUIRE(out.residue_attention.size() == static_cast<std::size_t>(c.heads));
      for (const auto& a : out.residue_attention)
        for (int f = 0; f < 3; ++f)
          CHECK((a.value().middleRows(f * 6, 6).colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      const LossTerms terms = loss(out, params, batch).values();
      CHECK(std::isfinite(terms.total));
      CHECK(terms.total > 0.0);
      CHECK((node ? terms.node > 0.0 : terms.node == 0.0));
    }
}

TEST_CASE("full-model gradient matches central differences") {
  const Trajectory traj = toy_hinge(3, 5, 4);
  for (bool node : {false, true}) {
    ModelConfig c = toy_config(6);
    c.node_embedding = node;
    c.coord_head = node;
    const ModelParams params = toy_params(traj, 5, c);
    const std::vector<int> frames{0, 1, 3};
    const PreparedBatch batch = prepare_frames(traj, frames, c);
    CHECK(model_grad_error(params, batch, 1e-5) <= 1e-4);
  }
}

TEST_CASE("prepare_frames rejects mismatched trajectories") {
  const Trajectory traj = toy_hinge(3, 5, 4);
  const std::vector<int> frames{0};
  CHECK_THROWS_AS(prepare_frames(traj, frames, toy_config(8)), ShapeError);
  const std::vector<int> bad{9};
  CHECK_THROWS(prepare_frames(traj, bad, toy_config(6)));
}

TEST_CASE("decode and embed") {
  const Trajectory traj = toy_hinge(3, 6, 6);
  ModelConfig c = toy_config(6);
  c.coord_head = true;
  const ModelParams params = toy_params(traj, 7, c);
  const std::vector<int> frames{0, 1, 2, 3, 4, 5};
  const Embedding e = embed(params, traj, frames);
  CHECK(e.z.rows() == 6);
  CHECK(e.t_hat.size() == 6);
  CHECK(e.features.cols() == 6 * c.features());
  CHECK((e.residue_scores.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  const Embedding again = embed(params, traj, frames);
  CHECK((e.z.array() == again.z.array()).all());
  const DecodedStructure d = decode_latent(params, e.z.row(2));
  CHECK(d.pairdist.rows() == 6);
  CHECK((d.pairdist - d.pairdist.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.pairdist.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.dihedral_diff.rows() == 3);
  REQUIRE(d.coords.has_value());
  CHECK(d.coords->rows() == 6);
  // a batch of one equals the same frame inside a larger batch
  const std::vector<int> one{2};
  CHECK((embed(params, traj, one).z.row(0) - e.z.row(2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("checkpoint round trip is bitwise") {
  const Trajectory traj = toy_hinge(3, 6, 8);
  ModelConfig c = toy_config(6);
  c.node_embedding = true;
  c.alpha = 0.2;
  const ModelParams params = toy_params(traj, 9, c);
  std::ostringstream os;
  write_checkpoint(os, params, ArtifactHeader{"pscape", "train", 9, {}, true});
  std::istringstream is(os.str());
  const ModelParams back = read_checkpoint(is);
  CHECK(back.config.alpha == 0.2);
  CHECK(back.config.node_embedding);
  REQUIRE(back.tensors.size() == params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    CHECK(back.tensors[i].first == params.tensors[i].first);
    CHECK((back.tensors[i].second.array() == params.tensors[i].second.array()).all());
  }
  CHECK((back.norm.pd_mean.array() == params.norm.pd_mean.array()).all());
  CHECK(back.norm.pd_scale == params.norm.pd_scale);
  std::ostringstream again;
  write_checkpoint(again, back);
  std::ostringstream plain;
  write_checkpoint(plain, params);
  CHECK(again.str() == plain.str());
}

TEST_CASE("corrupt checkpoints are rejected") {
  const Trajectory traj = toy_hinge(3, 6, 8);
  const ModelParams params = toy_params(traj, 9, toy_config(6));
  std::ostringstream os;
  write_checkpoint(os, params);
  std::string text = os.str();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(truncated), Error);
  std::istringstream bad_magic("PSCAPE-CKPT v9\n");
  CHECK_THROWS_AS(read_checkpoint(bad_magic), ParseError);
  ModelConfig c = toy_config(6);
  CHECK_THROWS_AS(apply_config_value(c, "no_such_key", "1"), ArgumentError);
  apply_config_value(c, "latent_dim", "7");
  CHECK(c.latent_dim == 7);
}
