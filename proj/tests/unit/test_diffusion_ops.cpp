#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "pscape/diffusion_ops.hpp"
#include "pscape/error.hpp"

using namespace pscape;
using namespace testing_support;

TEST_CASE("3-path lazy walk and symmetric spectrum") {
  const ProteinGraph g = path_graph(3);
  const DiffusionOperators ops = make_diffusion(g);
  Matrix expect(3, 3);
  expect << 0.5, 0.25, 0.0, 0.5, 0.5, 0.5, 0.0, 0.25, 0.5;
  CHECK((ops.P - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(ops.eigvals(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ops.eigvals(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(ops.eigvals(2)) < 1e-12);
  const SpectralGap sg = spectral_gap(ops.T);
  CHECK(sg.lambda2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sg.gap == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("complete graph K3 has lambda2 = 1/4") {
  const DiffusionOperators ops = make_diffusion(complete_graph(3));
  CHECK(spectral_gap(ops.T).lambda2 == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("single edge: P is idempotent") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Matrix P = lazy_walk(a, a.rowwise().sum());
  CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((P.array() - 0.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("random graphs: P column-stochastic, T symmetric and similar to P, spectrum in [0,1]") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ProteinGraph g = random_graph(8 + trial % 10, rng);
    const DiffusionOperators ops = make_diffusion(g);
    CHECK((ops.P.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((ops.P.array() >= 0.0).all());
    CHECK((ops.T - ops.T.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    const Vector d = g.degree;
    const Matrix conj = d.cwiseSqrt().cwiseInverse().asDiagonal() * ops.P * d.cwiseSqrt().asDiagonal();
    CHECK((conj - ops.T).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ops.eigvals(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ops.eigvals.minCoeff() >= -1e-12);
    CHECK(ops.eigvals.maxCoeff() <= 1.0 + 1e-12);
    for (Eigen::Index i = 1; i < ops.eigvals.size(); ++i) CHECK(ops.eigvals(i) <= ops.eigvals(i - 1));
    // leading eigenvector is proportional to sqrt(degree)
    const Vector u = d.cwiseSqrt().normalized();
    CHECK(rel_error(ops.lead_eigvec, u) < 1e-8);
    CHECK(spectral_gap(ops.T).lambda2 < 1.0 - 1e-9); // connected
    const Matrix ln = normalized_laplacian(g.adjacency, g.degree);
    CHECK((ops.T - (Matrix::Identity(g.size(), g.size()) - 0.5 * ln)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("weighted operator norm of P is one") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const ProteinGraph g = random_graph(10, rng);
    const Matrix P = lazy_walk(g.adjacency, g.degree);
    CHECK(weighted_opnorm(P, g.degree) == doctest::Approx(1.0).epsilon(1e-10));
    // opnorm cross-check against a power iteration on M^T M
    const Matrix m = weight_conjugate(P - P * P, g.degree);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols());
    for (int it = 0; it < 2000; ++it) v = (m.transpose() * (m * v)).normalized();
    CHECK(opnorm(m) == doctest::Approx((m * v).norm()).epsilon(1e-6));
  }
}

TEST_CASE("weighted norm") {
  Vector x(2), d(2);
  x << 2.0, 3.0;
  d << 4.0, 9.0;
  CHECK(weighted_norm(x, d) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("power cascade matches repeated multiplication") {
  Rng rng(5);
  const ProteinGraph g = random_graph(9, rng);
  const Matrix P = lazy_walk(g.adjacency, g.degree);
  const auto pw = matrix_power_cascade(P, 6);
  REQUIRE(pw.size() == 7);
  CHECK(pw[0].isIdentity());
  Matrix acc = Matrix::Identity(9, 9);
  for (int t = 1; t <= 6; ++t) {
    acc = naive_matmul(acc, P);
    CHECK((pw[static_cast<std::size_t>(t)] - acc).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("symmetric eigenvalues descending") {
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  const Vector e = symmetric_eigenvalues(m);
  CHECK(e(0) == doctest::Approx(3.0));
  CHECK(e(1) == doctest::Approx(1.0));
}
