#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pscape/diffusion_ops.hpp"
#include "pscape/graph_builder.hpp"
#include "pscape/rng.hpp"
#include "pscape/scattering.hpp"

namespace pscape {

/// A graph and a perturbed copy on the same vertex set.
struct PerturbationPair {
  ProteinGraph g;
  ProteinGraph g_prime;
  std::string description;
};

/// Toggles `flips` random vertex pairs, redrawing any toggle that would
/// disconnect the graph.
PerturbationPair perturb_edges(const ProteinGraph& g, int flips, Rng& rng);

/// Jitters coordinates by N(0, sigma^2) and rebuilds the k-NN graph.
PerturbationPair perturb_coordinates(const TrajectoryFrame& frame, int k, double sigma, Rng& rng);

/// Degree-preserving double edge swaps: (a,b),(c,d) -> (a,d),(c,b).
PerturbationPair swap_edges(const ProteinGraph& g, int swaps, Rng& rng);

struct KappaR {
  double kappa = 0.0;
  double R = 1.0;
  double kappa_entrywise = 0.0;
  double R_entrywise = 1.0;
};

/// kappa = max(||I - D^-1/2 D'^1/2||, ||I - D'^-1/2 D^1/2||),
/// R = max(||D^-1/2 D'^1/2||, ||D'^-1/2 D^1/2||), by SVD and by entries.
KappaR compute_kappa_R(const Vector& degree, const Vector& degree_prime);

/// sum_{k>=1} k^2 lambda^k = lambda (1 + lambda) / (1 - lambda)^3.
double power_series_k2(double lambda);

/// power_series_k2(lambda) / lambda^2, or 1 when lambda is 0.
double lemma_constant(double lambda);

/// One inequality check `lhs <= rhs`.
struct CheckRecord {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
  std::string detail;

  double ratio() const;
};

/// lhs <= rhs * (1 + rel_tol) + 1e-14.
bool holds(double lhs, double rhs, double rel_tol);

CheckRecord make_check(std::string name, double lhs, double rhs, double rel_tol, std::string detail = {});

struct PairQuantities {
  KappaR kr;
  DiffusionOperators ops, ops_prime;
  double dP_w = 0.0;   // ||P - P'|| on the D-weighted space
  double dT = 0.0;     // ||T - T'||_2
  double lambda2 = 0.0, lambda2_prime = 0.0, lambda2_star = 0.0;
  Matrix T_bar, T_bar_prime; // T - v v^T
};

PairQuantities pair_quantities(const PerturbationPair& pair);

/// sup over ||x||_w = 1 of sum_j ||(Psi_j - Psi'_j) x||_w^2, via the SVD of the
/// conjugated (J+1)n x n stack.
double wavelet_difference_norm2(const WaveletBank& a, const WaveletBank& b, const Vector& degree);

/// ||x||_w^2 summed over all l-tuples |Psi_jl ... |Psi_j1 x||, for every
/// tuple in [0, J]^l.
double iterated_energy(const WaveletBank& bank, const Vector& x, const Vector& degree, int ell);

struct WaveletStabilityReport {
  PairQuantities q;
  double lhs = 0.0;     // ||W - W'||_w^2
  double bracket = 0.0; // kappa(1+R^3) + R dP_w + kappa^2 (kappa+1)^2
  double c_hat = 0.0;   // lhs / bracket, 0 when bracket is 0
  bool anomaly = false; // bracket 0 with lhs above tolerance
  std::vector<CheckRecord> checks;
};

/// Wavelet bound quantities plus the checks with no unknown constant:
/// the explicit power-difference series bound on T-bar, ||T - T'|| <=
/// kappa(1+R^3) + R dP_w, and ||T - T'|| < 2.
WaveletStabilityReport verify_wavelet_stability(const PerturbationPair& pair, std::span<const int> scales,
                                                double rel_tol = 1e-9);

/// Frame bound sum_j ||Psi_j x||_w^2 + ||lowpass x||_w^2 <= ||x||_w^2 for
/// random x. Pass an all-ones degree for the unweighted norm.
std::vector<CheckRecord> verify_frame_nonexpansive(const WaveletBank& bank, const Vector& degree, int trials, Rng& rng,
                                                   double rel_tol = 1e-10);

/// iterated_energy(x, ell) <= ||x||_w^2 for random x.
std::vector<CheckRecord> verify_nonexpansive_iterated(const WaveletBank& bank, const Vector& degree, int ell,
                                                      int trials, Rng& rng, double rel_tol = 1e-10);

/// sum over l-tuples of ||U x - U' x||_w^2 <= ||W - W'||_w^2 (sum_{k<l} R^2k)^2 ||x||_w^2.
std::vector<CheckRecord> verify_scattering_stability(const PerturbationPair& pair, const BankConfig& bank, int ell,
                                                     int trials, Rng& rng, double rel_tol = 1e-9);

/// Pi * scatter(x) against scatter on the relabelled graph with Pi x, max
/// absolute entry difference <= tol.
std::vector<CheckRecord> verify_perm_equivariance(const ProteinGraph& g, const BankConfig& bank, int trials, Rng& rng,
                                                  double tol = 1e-10);

/// Everything above on random chain graphs, as run by `pscape verify --all`.
struct CampaignConfig {
  int n = 30;
  int k = 5;
  int trials = 50;
  int J = 3;
  int flips = 2;
  std::uint64_t seed = 1;
  bool j_sweep = true; // C-hat over J = 2..5 and its spread check
};

struct CampaignReport {
  std::vector<CheckRecord> checks;
  std::vector<std::pair<int, double>> c_hat_max_by_J; // J -> max over pairs of C-hat
  double c_hat_spread = 0.0;                          // max/min of the above

  std::size_t failures() const;
};

CampaignReport run_campaign(const CampaignConfig& config);

/// `name,lhs,rhs,ratio,pass` rows.
void write_checks_csv(std::ostream& os, std::span<const CheckRecord> checks);

} // namespace pscape
