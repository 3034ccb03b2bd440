#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "../support.hpp"
#include "pscape/error.hpp"
#include "pscape/evaluation.hpp"
#include "pscape/training.hpp"

using namespace pscape;
using namespace testing_support;

TEST_CASE("make_split: 20 windows of 10 over 1000 frames") {
  const SplitPlan s = make_split(1000, 20, 10, 42);
  CHECK(s.windows.size() == 20);
  CHECK(s.test_frames.size() == 200);
  CHECK(s.train_frames.size() == 800);
  for (std::size_t i = 1; i < s.windows.size(); ++i)
    CHECK(s.windows[i - 1].first + s.windows[i - 1].second <= s.windows[i].first);
  std::set<int> all(s.test_frames.begin(), s.test_frames.end());
  all.insert(s.train_frames.begin(), s.train_frames.end());
  CHECK(all.size() == 1000);
  const SplitPlan again = make_split(1000, 20, 10, 42);
  CHECK(again.windows == s.windows);
  CHECK(make_split(1000, 20, 10, 43).windows != s.windows);
}

TEST_CASE("make_split rejects oversubscribed requests") {
  CHECK_THROWS_AS(make_split(100, 20, 5, 0), ArgumentError);
  CHECK_NOTHROW(make_split(100, 10, 5, 0));
}

TEST_CASE("prefix split and split csv round trip") {
  const SplitPlan p = prefix_split(23, 15, 5);
  CHECK(p.train_frames.size() == 15);
  CHECK(p.test_frames.size() == 8);
  CHECK(p.windows.back() == std::pair<int, int>{20, 3});
  std::ostringstream os;
  write_split_csv(os, p);
  std::istringstream is(os.str());
  const SplitPlan back = read_split_csv(is, 23);
  CHECK(back.windows == p.windows);
  CHECK(back.test_frames == p.test_frames);
  std::istringstream overlap("start,length\n0,5\n3,4\n");
  CHECK_THROWS_AS(read_split_csv(overlap, 23), ParseError);
  std::istringstream outside("start,length\n20,5\n");
  CHECK_THROWS_AS(read_split_csv(outside, 23), ParseError);
}

TEST_CASE("Adam step with bias correction") {
  ModelParams p;
  p.tensors.emplace_back("w", Matrix::Constant(1, 2, 1.0));
  TrainConfig c;
  c.lr = 0.1;
  Adam adam(p, c);
  Matrix g(1, 2);
  g << 2.0, -0.5;
  const std::vector<Matrix> grads{g};
  adam.step(p, grads);
  // first step moves each entry by lr * sign(g) up to eps
  CHECK(p.tensors[0].second(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p.tensors[0].second(0, 1) == doctest::Approx(1.1).epsilon(1e-7));
  const std::vector<Matrix> wrong;
  CHECK_THROWS_AS(adam.step(p, wrong), ShapeError);
}

TEST_CASE("training reduces the loss and is deterministic") {
  const Trajectory traj = toy_hinge(3, 24, 1);
  const ModelConfig c = toy_config(6);
  std::vector<int> frames;
  for (int f = 0; f < 24; f += 2) frames.push_back(f);
  TrainConfig tc;
  tc.epochs = 60;
  tc.lr = 1e-2;
  tc.seed = 5;
  int calls = 0;
  tc.on_epoch = [&](int, const LossTerms&) { ++calls; };
  const TrainResult a = train(traj, frames, c, tc);
  CHECK(calls == 60);
  REQUIRE(a.curve.size() == 60);
  CHECK(a.curve.back().total < a.curve.front().total);
  CHECK(a.curve.back().time < 0.5 * a.curve.front().time);
  tc.on_epoch = nullptr;
  const TrainResult b = train(traj, frames, c, tc);
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i)
    CHECK((a.params.tensors[i].second.array() == b.params.tensors[i].second.array()).all());
  CHECK(a.expected_scales.size() == static_cast<std::size_t>(c.J + 1));
}

TEST_CASE("one epoch at zero learning rate leaves the parameters unchanged") {
  const Trajectory traj = toy_hinge(3, 10, 1);
  const std::vector<int> frames{0, 2, 4, 6};
  Rng rng(3);
  ModelParams p = init_params(toy_config(6), rng);
  p.norm = fit_normalization(traj, frames);
  TrainConfig tc;
  tc.epochs = 1;
  tc.lr = 0.0;
  const TrainResult r = train_from(p, traj, frames, tc);
  for (std::size_t i = 0; i < p.tensors.size(); ++i)
    CHECK((r.params.tensors[i].second.array() == p.tensors[i].second.array()).all());
  CHECK(r.curve.size() == 1);
}

TEST_CASE("divergence names the loss term") {
  const Trajectory traj = toy_hinge(3, 10, 1);
  std::vector<int> frames{0, 1, 2, 3};
  TrainConfig tc;
  tc.epochs = 3;
  Rng rng(1);
  ModelParams p = init_params(toy_config(6), rng);
  p.norm = fit_normalization(traj, frames);
  p.norm.t_hi = p.norm.t_lo; // time target becomes inf
  try {
    train_from(p, traj, frames, tc);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("loss term 'time' diverged at epoch 1") != std::string::npos);
  }
}

TEST_CASE("curve csv") {
  std::vector<LossTerms> curve(2);
  curve[1].total = 0.5;
  std::ostringstream os;
  write_curve_csv(os, curve);
  CHECK(os.str() == "epoch,total,time,structure,scattering,node\n1,0,0,0,0,0\n2,0.5,0,0,0,0\n");
}

TEST_CASE("Dirichlet energy on a path graph") {
  const ProteinGraph g = path_graph(5);
  Eigen::VectorXd x(5);
  x << 1, 2, 4, 7, 11;
  // sum over edges of squared differences / sum of squares
  const double expect = (1.0 + 4.0 + 9.0 + 16.0) / (1.0 + 4.0 + 16.0 + 49.0 + 121.0);
  CHECK(dirichlet_energy(g.adjacency, x) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(dirichlet_energy(g.adjacency, Eigen::VectorXd::Zero(5)) == 0.0);
}

TEST_CASE("Dirichlet energy on a k-NN graph of a line is lower for ordered signals") {
  Matrix pts(20, 1);
  Eigen::VectorXd ordered(20), shuffled(20);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    pts(i, 0) = i;
    ordered(i) = i;
  }
  shuffled = ordered;
  std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
  CHECK(dirichlet_energy_knn(pts, ordered, 2) < dirichlet_energy_knn(pts, shuffled, 2));
  CHECK_THROWS_AS(dirichlet_energy_knn(Matrix::Ones(20, 2), ordered, 2), NumericError);
}

TEST_CASE("rank correlations") {
  const std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 45}, c{4, 3, 2, 1}, ties{1, 1, 2, 3};
  CHECK(spearman(a, b) == doctest::Approx(1.0));
  CHECK(spearman(a, c) == doctest::Approx(-1.0));
  const Eigen::VectorXd r = ranks(ties);
  CHECK(r(0) == 1.5);
  CHECK(r(1) == 1.5);
  CHECK(r(3) == 4.0);
  CHECK(pearson(a, b) < 1.0);
  CHECK(pearson(a, b) > 0.99);
  const std::vector<double> flat{2, 2, 2, 2};
  CHECK(pearson(a, flat) == 0.0);
}

TEST_CASE("mean and population std") {
  const std::vector<double> v{1, 3};
  const MeanStd m = mean_std(v);
  CHECK(m.mean == 2.0);
  CHECK(m.std == 1.0);
}

TEST_CASE("Kabsch RMSD is zero under rigid motion") {
  Rng rng(4);
  const Matrix a = random_matrix(8, 3, rng);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  Matrix b = a * rot.transpose();
  b.rowwise() += Eigen::RowVector3d(5, -1, 2);
  CHECK(kabsch_rmsd(a, b) < 1e-12);
  // a reflection is not a rotation
  Matrix m = a;
  m.col(2) *= -1.0;
  CHECK(kabsch_rmsd(a, m) > 1e-3);
}

TEST_CASE("k-means separates two blobs") {
  Rng rng(5);
  Matrix pts(200, 2);
  std::vector<int> labels(200);
  for (int i = 0; i < 200; ++i) {
    labels[static_cast<std::size_t>(i)] = i % 2;
    pts(i, 0) = (i % 2 ? 5.0 : -5.0) + rng.normal();
    pts(i, 1) = rng.normal();
  }
  const Clustering c = kmeans(pts, 2, 1);
  CHECK(label_agreement(c.assignment, labels, 2) >= 0.95);
  CHECK(c.inertia > 0.0);
  const Clustering again = kmeans(pts, 2, 1);
  CHECK(again.assignment == c.assignment);
  const std::vector<int> flipped{1, 0, 1}, truth{0, 1, 0};
  CHECK(label_agreement(flipped, truth, 2) == 1.0);
}

TEST_CASE("interpolation endpoints decode the endpoints") {
  const Trajectory traj = toy_hinge(3, 6, 1);
  Rng rng(2);
  ModelParams p = init_params(toy_config(6), rng);
  const std::vector<int> all{0, 1, 2, 3, 4, 5};
  p.norm = fit_normalization(traj, all);
  const Embedding e = embed(p, traj, all);
  const auto path = interpolate_latents(p, e.z.row(0), e.z.row(5), 4);
  REQUIRE(path.size() == 4);
  CHECK((path.front().pairdist - decode_latent(p, e.z.row(0)).pairdist).cwiseAbs().maxCoeff() == 0.0);
  CHECK((path.back().pairdist - decode_latent(p, e.z.row(5)).pairdist).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(interpolate_latents(p, e.z.row(0), e.z.row(5), 1));
}

TEST_CASE("positional variance of a hinge grows along the moving arm") {
  HingeParams hp;
  hp.noise_sigma = 0.0;
  hp.n_frames = 60;
  const Eigen::VectorXd v = positional_variance(synth_hinge(hp));
  CHECK(v(0) == doctest::Approx(v(4)).epsilon(1e-9)); // the fixed arm only sees the centroid shift
  CHECK(v(9) > v(5));
  CHECK(v(9) > v(0));
}

TEST_CASE("score_predictions on exact predictions") {
  const Trajectory traj = toy_hinge(3, 12, 2);
  const SplitPlan split = prefix_split(12, 8, 2);
  std::vector<DecodedStructure> pred;
  std::vector<StructureTargets> truth;
  std::vector<Matrix> coords;
  for (int f : split.test_frames) {
    const auto t = structure_targets(traj.frames[static_cast<std::size_t>(f)]);
    truth.push_back(t);
    pred.push_back(DecodedStructure{t.pairdist, t.dihedral_diff, traj.frames[static_cast<std::size_t>(f)].coords});
    coords.push_back(traj.frames[static_cast<std::size_t>(f)].coords);
  }
  const MetricsReport r = score_predictions(pred, truth, coords, split);
  CHECK(r.mae_pairdist.mean == 0.0);
  CHECK(r.mae_dihedral.mean == 0.0);
  CHECK(r.scc == doctest::Approx(1.0));
  CHECK(r.pcc == doctest::Approx(1.0));
  REQUIRE(r.rmsd.has_value());
  CHECK(*r.rmsd < 1e-12);
  CHECK(r.windows.size() == 2);
}

TEST_CASE("latent overlap ratio and PCA") {
  Rng rng(6);
  const Matrix a = random_matrix(40, 3, rng);
  Matrix far = a;
  far.array() += 100.0;
  CHECK(latent_overlap_ratio(a, a) == doctest::Approx(39.0 / 40.0)); // self-pairs count in the cross mean
  CHECK(latent_overlap_ratio(a, far) > 10.0);
  Matrix line(30, 3);
  for (int i = 0; i < 30; ++i) line.row(i) << i, 2.0 * i, 0.01 * rng.normal();
  const Matrix proj = pca_2d(line);
  CHECK(proj.cols() == 2);
  Eigen::VectorXd c0 = proj.col(0);
  CHECK(std::abs(c0(29) - c0(0)) == doctest::Approx(29.0 * std::sqrt(5.0)).epsilon(1e-3));
}

TEST_CASE("latents csv round trip") {
  Embedding e;
  e.z = Matrix(2, 2);
  e.z << 0.1, -2.0, 1.0 / 3.0, 5e-300;
  e.t = {4, 9};
  e.t_hat = Eigen::VectorXd::Zero(2);
  const std::vector<int> frames{4, 9};
  std::ostringstream os;
  write_latents_csv(os, e, frames);
  std::istringstream is(os.str());
  const LatentTable t = read_latents_csv(is);
  CHECK(t.frames == frames);
  CHECK((t.z.array() == e.z.array()).all());
}
