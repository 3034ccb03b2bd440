#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../support.hpp"
#include "pscape/diffusion_ops.hpp"
#include "pscape/stability.hpp"

using namespace pscape;
using namespace testing_support;

namespace {

std::size_t failures(const std::vector<CheckRecord>& checks) {
  std::size_t n = 0;
  for (const auto& c : checks) n += !c.pass;
  return n;
}

} // namespace

TEST_CASE("kappa and R for swapped degrees") {
  Vector d(2), dp(2);
  d << 1, 4;
  dp << 4, 1;
  const KappaR kr = compute_kappa_R(d, dp);
  CHECK(kr.kappa == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kr.R == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(kr.kappa_entrywise == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kr.R_entrywise == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("closing a 10-path into a cycle") {
  const ProteinGraph path = path_graph(10);
  Matrix a = path.adjacency;
  a(0, 9) = a(9, 0) = 1.0;
  const ProteinGraph cycle = graph_from_adjacency(a, path.signal);
  const KappaR kr = compute_kappa_R(path.degree, cycle.degree);
  CHECK(kr.kappa == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
  CHECK(kr.R == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("identical degrees give kappa 0 and R 1") {
  Rng rng(1);
  const ProteinGraph g = random_graph(12, rng);
  const KappaR kr = compute_kappa_R(g.degree, g.degree);
  CHECK(kr.kappa == doctest::Approx(0.0));
  CHECK(kr.R == doctest::Approx(1.0));
}

TEST_CASE("power series closed form") {
  for (double lambda : {0.0, 0.1, 0.5, 0.9}) {
    double direct = 0.0;
    for (int k = 1; k < 5000; ++k) direct += k * k * std::pow(lambda, k);
    CHECK(power_series_k2(lambda) == doctest::Approx(direct).epsilon(1e-10));
  }
  CHECK(lemma_constant(0.0) == 1.0);
  CHECK(lemma_constant(0.5) == doctest::Approx(power_series_k2(0.5) / 0.25));
}

TEST_CASE("check records") {
  CHECK(holds(1.0, 1.0, 0.0));
  CHECK(holds(1.0 + 1e-12, 1.0, 1e-10));
  CHECK_FALSE(holds(1.1, 1.0, 1e-10));
  const CheckRecord c = make_check("x", 2.0, 4.0, 0.0);
  CHECK(c.pass);
  CHECK(c.ratio() == 0.5);
}

TEST_CASE("perturbations keep graphs connected and on the same vertex set") {
  Rng rng(2);
  const ProteinGraph g = random_graph(20, rng);
  const PerturbationPair a = perturb_edges(g, 3, rng);
  CHECK(is_connected(a.g_prime.adjacency));
  CHECK((a.g.adjacency - a.g_prime.adjacency).cwiseAbs().sum() == doctest::Approx(6.0));
  const PerturbationPair s = swap_edges(g, 2, rng);
  CHECK((s.g.degree - s.g_prime.degree).cwiseAbs().maxCoeff() == 0.0);
  TrajectoryFrame f;
  f.coords = random_chain(20, rng);
  f.sequence = round_robin_sequence(20);
  const PerturbationPair c = perturb_coordinates(f, 4, 0.3, rng);
  CHECK(c.g.size() == 20);
  CHECK(c.g_prime.size() == 20);
}

TEST_CASE("frame and iterated non-expansiveness hold on random graphs") {
  Rng rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    const ProteinGraph g = random_graph(15, rng);
    const WaveletBank bank = dyadic_bank(lazy_walk(g.adjacency, g.degree), 3);
    CHECK(failures(verify_frame_nonexpansive(bank, g.degree, 10, rng)) == 0);
    for (int ell = 1; ell <= 3; ++ell) CHECK(failures(verify_nonexpansive_iterated(bank, g.degree, ell, 10, rng)) == 0);
  }
}

TEST_CASE("iterated energy at order one is the wavelet energy") {
  Rng rng(4);
  const ProteinGraph g = random_graph(10, rng);
  const WaveletBank bank = dyadic_bank(lazy_walk(g.adjacency, g.degree), 2);
  const Vector x = random_matrix(10, 1, rng).col(0);
  double direct = 0.0;
  for (const auto& op : bank.operators) direct += std::pow(weighted_norm((op * x).cwiseAbs(), g.degree), 2);
  CHECK(iterated_energy(bank, x, g.degree, 1) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("wavelet and scattering stability bounds") {
  Rng rng(5);
  BankConfig bc;
  bc.J = 3;
  const std::vector<int> scales{1, 2, 4, 8};
  for (int trial = 0; trial < 3; ++trial) {
    const PerturbationPair pair = perturb_edges(random_graph(20, rng), 2, rng);
    const WaveletStabilityReport r = verify_wavelet_stability(pair, scales);
    CHECK(failures(r.checks) == 0);
    CHECK_FALSE(r.anomaly);
    CHECK(r.lhs >= 0.0);
    for (int ell = 1; ell <= 2; ++ell) CHECK(failures(verify_scattering_stability(pair, bc, ell, 5, rng)) == 0);
  }
}

TEST_CASE("unperturbed pair has zero wavelet difference") {
  Rng rng(6);
  const ProteinGraph g = random_graph(12, rng);
  const WaveletBank b = dyadic_bank(lazy_walk(g.adjacency, g.degree), 3);
  CHECK(wavelet_difference_norm2(b, b, g.degree) == doctest::Approx(0.0));
}

TEST_CASE("permutation equivariance checks pass") {
  Rng rng(7);
  BankConfig bc;
  bc.J = 2;
  CHECK(failures(verify_perm_equivariance(random_graph(14, rng), bc, 5, rng)) == 0);
}

TEST_CASE("small campaign runs clean and writes csv") {
  CampaignConfig c;
  c.n = 14;
  c.k = 4;
  c.trials = 3;
  c.J = 2;
  c.j_sweep = false;
  const CampaignReport r = run_campaign(c);
  CHECK(r.failures() == 0);
  CHECK_FALSE(r.checks.empty());
  std::ostringstream os;
  write_checks_csv(os, r.checks);
  CHECK(os.str().rfind("name,lhs,rhs,ratio,pass\n", 0) == 0);
}
