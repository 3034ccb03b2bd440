#include <doctest.h>

#include <sstream>

#include "../support.hpp"
#include "pscape/diffusion_ops.hpp"
#include "pscape/error.hpp"
#include "pscape/scattering.hpp"

using namespace pscape;
using namespace testing_support;

TEST_CASE("3-path, dyadic J=1, impulse at the center") {
  const ProteinGraph g = path_graph(3);
  const Matrix P = lazy_walk(g.adjacency, g.degree);
  const WaveletBank bank = dyadic_bank(P, 1);
  CHECK(bank.scales == std::vector<int>{1, 2});
  Matrix x = Matrix::Zero(3, 1);
  x(1, 0) = 1.0;
  const Matrix psi0x = bank.operators[0] * x;
  CHECK(psi0x(0, 0) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(psi0x(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(psi0x(2, 0) == doctest::Approx(-0.25).epsilon(1e-15));
  const ScatteringOutput s = scatter(bank, x);
  REQUIRE(s.coeffs.cols() == features_per_channel(1));
  CHECK(s.coeffs(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.coeffs(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.coeffs(2, 1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("feature count per channel") {
  CHECK(features_per_channel(1) == 4);
  CHECK(features_per_channel(4) == 16);
  CHECK(feature_labels(2, 3).size() == 3u * 7u);
  CHECK(feature_labels(1, kAlphabetSize).front() == "(0,0,A)");
  CHECK(feature_labels(2, 1)[4] == "(2,0,1,0)");
}

TEST_CASE("wavelets telescope to the identity") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const ProteinGraph g = random_graph(12, rng);
    const Matrix P = lazy_walk(g.adjacency, g.degree);
    CHECK(telescoping_residual(dyadic_bank(P, 4)) < 1e-12);
    const std::vector<int> scales{1, 3, 4, 9};
    CHECK(telescoping_residual(generalized_bank(P, scales)) < 1e-12);
    Matrix theta = random_matrix(5, 16, rng);
    CHECK(telescoping_residual(learnable_bank(P, theta, 16)) < 1e-12);
  }
}

TEST_CASE("first-layer frame bound in the degree-weighted norm") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ProteinGraph g = random_graph(10, rng);
    const Matrix P = lazy_walk(g.adjacency, g.degree);
    const WaveletBank bank = dyadic_bank(P, 3);
    const Vector x = random_matrix(10, 1, rng).col(0);
    double energy = std::pow(weighted_norm(bank.lowpass * x, g.degree), 2);
    for (const auto& op : bank.operators) energy += std::pow(weighted_norm(op * x, g.degree), 2);
    CHECK(energy <= std::pow(weighted_norm(x, g.degree), 2) * (1.0 + 1e-12));
  }
}

TEST_CASE("sharp selection logits reproduce the hard-scale bank") {
  Rng rng(10);
  const ProteinGraph g = random_graph(9, rng);
  const Matrix P = lazy_walk(g.adjacency, g.degree);
  const std::vector<int> scales{1, 2, 4, 8};
  const WaveletBank hard = generalized_bank(P, scales);
  const WaveletBank soft = learnable_bank(P, selection_logits(scales, 16, 30.0), 16);
  for (std::size_t j = 0; j < hard.operators.size(); ++j)
    CHECK((hard.operators[j] - soft.operators[j]).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix x = random_matrix(9, 3, rng);
  CHECK((scatter(hard, x).coeffs - scatter(soft, x).coeffs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((dyadic_bank(P, 3).lowpass - hard.lowpass).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("expected scales and monotonicity") {
  const std::vector<int> scales{1, 2, 4, 8, 16};
  const Matrix theta = selection_logits(scales, 16, 30.0);
  const auto e = expected_scales(theta);
  for (std::size_t j = 0; j < scales.size(); ++j) CHECK(e[j] == doctest::Approx(scales[j]).epsilon(1e-9));
  CHECK(scales_increasing(theta));
  Matrix flipped = theta;
  flipped.row(0).swap(flipped.row(1));
  CHECK_FALSE(scales_increasing(flipped));
  const auto init = expected_scales(initial_selection(4, 16));
  for (std::size_t j = 1; j < init.size(); ++j) CHECK(init[j] > init[j - 1]);
}

TEST_CASE("scattering is permutation equivariant") {
  Rng rng(15);
  for (int trial = 0; trial < 5; ++trial) {
    const ProteinGraph g = random_graph(11, rng);
    const auto perm = random_permutation(11, rng);
    const ProteinGraph h = permute_graph(g, perm);
    const Matrix Pm = permutation_matrix(perm);
    const Matrix a = scatter(dyadic_bank(lazy_walk(g.adjacency, g.degree), 3), g.signal).coeffs;
    const Matrix b = scatter(dyadic_bank(lazy_walk(h.adjacency, h.degree), 3), h.signal).coeffs;
    CHECK((Pm * a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("invalid banks") {
  const ProteinGraph g = path_graph(4);
  const Matrix P = lazy_walk(g.adjacency, g.degree);
  CHECK_THROWS_AS(dyadic_bank(P, 0), ArgumentError);
  const std::vector<int> bad{2, 2};
  CHECK_THROWS_AS(generalized_bank(P, bad), ArgumentError);
  CHECK_THROWS_AS(scatter(dyadic_bank(P, 1), Matrix::Ones(3, 1)), ShapeError);
  CHECK_THROWS_AS(learnable_bank(P, Matrix::Zero(3, 4), 5), ArgumentError);
}

TEST_CASE("batched differentiable scattering matches the per-frame transform") {
  Rng rng(19);
  const int n = 8, frames = 3, t_max = 8, J = 2;
  std::vector<Matrix> diff;
  std::vector<Matrix> signals;
  for (int f = 0; f < frames; ++f) {
    const ProteinGraph g = random_graph(n, rng, 3);
    diff.push_back(lazy_walk(g.adjacency, g.degree));
    signals.push_back(random_matrix(n, 2, rng));
  }
  const Matrix theta = random_matrix(J + 1, t_max, rng);
  ad::Tape tape;
  const ad::Var th = tape.leaf(theta);
  const ad::Var table = tape.constant(power_table(diff, t_max));
  const auto soft = soft_scale_operators(th, table, frames, n);
  Matrix stacked(frames * n, 2);
  for (int f = 0; f < frames; ++f) stacked.middleRows(f * n, n) = signals[static_cast<std::size_t>(f)];
  const ad::Var out = scatter_batched(soft, tape.constant(stacked), frames);
  for (int f = 0; f < frames; ++f) {
    const Matrix ref = scatter(learnable_bank(diff[static_cast<std::size_t>(f)], theta, t_max),
                               signals[static_cast<std::size_t>(f)]).coeffs;
    CHECK((out.value().middleRows(f * n, n) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("scattering csv has a label header and one row per residue") {
  const ProteinGraph g = path_graph(4);
  const ScatteringOutput s = scatter(dyadic_bank(lazy_walk(g.adjacency, g.degree), 1), g.signal);
  std::ostringstream os;
  write_scattering_csv(os, s);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 5);
  CHECK(os.str().find("\"(0,0,A)\"") != std::string::npos);
}
