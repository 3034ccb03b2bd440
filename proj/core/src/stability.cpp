#include "pscape/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "pscape/error.hpp"
#include "pscape/text_io.hpp"

namespace pscape {

namespace {

constexpr int kMaxRedraws = 1000;

ProteinGraph with_adjacency(const ProteinGraph& g, const Matrix& a) {
  return graph_from_adjacency(a, g.signal, g.frame_t);
}

Vector random_signal(int n, Rng& rng) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal();
  return x;
}

double wnorm2(const Vector& x, const Vector& degree) {
  const double v = weighted_norm(x, degree);
  return v * v;
}

std::string join_tuple(const std::vector<int>& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
  return s + ")";
}

} // namespace

PerturbationPair perturb_edges(const ProteinGraph& g, int flips, Rng& rng) {
  if (flips < 0) throw ArgumentError("perturb_edges: flips must be >= 0");
  const int n = g.size();
  Matrix a = g.adjacency;
  std::set<std::pair<int, int>> used;
  int done = 0;
  int attempts = 0;
  while (done < flips) {
    if (++attempts > kMaxRedraws * std::max(1, flips))
      throw GraphError("perturb_edges: could not keep the graph connected");
    int i = static_cast<int>(rng.uniform_int(0, n - 1));
    int j = static_cast<int>(rng.uniform_int(0, n - 1));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (used.count({i, j})) continue;
    const double old = a(i, j);
    a(i, j) = a(j, i) = 1.0 - old;
    if (old == 1.0 && !is_connected(a)) {
      a(i, j) = a(j, i) = old;
      continue;
    }
    used.insert({i, j});
    ++done;
  }
  return {g, with_adjacency(g, a), "edge-flip m=" + std::to_string(flips)};
}

PerturbationPair perturb_coordinates(const TrajectoryFrame& frame, int k, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ArgumentError("perturb_coordinates: sigma must be >= 0");
  const ProteinGraph g = build_knn_graph(frame, k);
  for (int attempt = 0; attempt < 100; ++attempt) {
    TrajectoryFrame moved = frame;
    for (Eigen::Index i = 0; i < moved.coords.size(); ++i) moved.coords.data()[i] += rng.normal(0.0, sigma);
    try {
      return {g, build_knn_graph(moved, k), "coordinate-jitter sigma=" + format_double(sigma)};
    } catch (const GraphError&) {
    }
  }
  throw GraphError("perturb_coordinates: jittered graph stayed disconnected; lower sigma");
}

PerturbationPair swap_edges(const ProteinGraph& g, int swaps, Rng& rng) {
  if (swaps < 0) throw ArgumentError("swap_edges: swaps must be >= 0");
  Matrix a = g.adjacency;
  int done = 0;
  int attempts = 0;
  while (done < swaps) {
    if (++attempts > kMaxRedraws * std::max(1, swaps)) throw GraphError("swap_edges: no admissible swap found");
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i + 1; j < a.cols(); ++j)
        if (a(i, j) != 0.0) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    auto [p, q] = edges[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(edges.size()) - 1))];
    auto [r, s] = edges[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(edges.size()) - 1))];
    if (rng.bernoulli(0.5)) std::swap(r, s);
    if (p == r || p == s || q == r || q == s) continue;
    if (a(p, s) != 0.0 || a(r, q) != 0.0) continue;
    a(p, q) = a(q, p) = 0.0;
    a(r, s) = a(s, r) = 0.0;
    a(p, s) = a(s, p) = 1.0;
    a(r, q) = a(q, r) = 1.0;
    if (!is_connected(a)) {
      a(p, s) = a(s, p) = 0.0;
      a(r, q) = a(q, r) = 0.0;
      a(p, q) = a(q, p) = 1.0;
      a(r, s) = a(s, r) = 1.0;
      continue;
    }
    ++done;
  }
  return {g, with_adjacency(g, a), "degree-preserving swaps=" + std::to_string(swaps)};
}

KappaR compute_kappa_R(const Vector& degree, const Vector& degree_prime) {
  if (degree.size() != degree_prime.size()) throw ShapeError("compute_kappa_R: degree vectors differ in length");
  const auto n = degree.size();
  const Vector fwd = degree_prime.cwiseQuotient(degree).cwiseSqrt();
  const Vector bwd = degree.cwiseQuotient(degree_prime).cwiseSqrt();
  const Matrix I = Matrix::Identity(n, n);
  KappaR kr;
  kr.kappa = std::max(opnorm(I - Matrix(fwd.asDiagonal())), opnorm(I - Matrix(bwd.asDiagonal())));
  kr.R = std::max(opnorm(Matrix(fwd.asDiagonal())), opnorm(Matrix(bwd.asDiagonal())));
  kr.kappa_entrywise = std::max((1.0 - fwd.array()).abs().maxCoeff(), (1.0 - bwd.array()).abs().maxCoeff());
  kr.R_entrywise = std::max(fwd.cwiseAbs().maxCoeff(), bwd.cwiseAbs().maxCoeff());
  return kr;
}

double power_series_k2(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ArgumentError("power_series_k2: need 0 <= lambda < 1");
  return lambda * (1.0 + lambda) / std::pow(1.0 - lambda, 3);
}

double lemma_constant(double lambda) {
  if (lambda == 0.0) return 1.0;
  return power_series_k2(lambda) / (lambda * lambda);
}

double CheckRecord::ratio() const {
  if (rhs > 0.0) return lhs / rhs;
  return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

bool holds(double lhs, double rhs, double rel_tol) { return lhs <= rhs * (1.0 + rel_tol) + 1e-14; }

CheckRecord make_check(std::string name, double lhs, double rhs, double rel_tol, std::string detail) {
  return {std::move(name), lhs, rhs, holds(lhs, rhs, rel_tol), std::move(detail)};
}

PairQuantities pair_quantities(const PerturbationPair& pair) {
  if (pair.g.size() != pair.g_prime.size()) throw ShapeError("pair_quantities: graphs differ in vertex count");
  PairQuantities q;
  q.ops = make_diffusion(pair.g);
  q.ops_prime = make_diffusion(pair.g_prime);
  q.kr = compute_kappa_R(pair.g.degree, pair.g_prime.degree);
  q.dP_w = weighted_opnorm(q.ops.P - q.ops_prime.P, pair.g.degree);
  q.dT = opnorm(q.ops.T - q.ops_prime.T);
  q.lambda2 = q.ops.eigvals(1);
  q.lambda2_prime = q.ops_prime.eigvals(1);
  q.lambda2_star = std::max(q.lambda2, q.lambda2_prime);
  q.T_bar = q.ops.T - q.ops.lead_eigvec * q.ops.lead_eigvec.transpose();
  q.T_bar_prime = q.ops_prime.T - q.ops_prime.lead_eigvec * q.ops_prime.lead_eigvec.transpose();
  return q;
}

double wavelet_difference_norm2(const WaveletBank& a, const WaveletBank& b, const Vector& degree) {
  if (a.operators.size() != b.operators.size() || a.size() != b.size())
    throw ShapeError("wavelet_difference_norm2: banks differ in shape");
  const auto n = a.size();
  Matrix stack(static_cast<Eigen::Index>(a.operators.size()) * n, n);
  for (std::size_t j = 0; j < a.operators.size(); ++j)
    stack.middleRows(static_cast<Eigen::Index>(j) * n, n) = a.operators[j] - b.operators[j];
  const double s = opnorm(weight_conjugate(stack, degree));
  return s * s;
}

double iterated_energy(const WaveletBank& bank, const Vector& x, const Vector& degree, int ell) {
  if (ell < 1) throw ArgumentError("iterated_energy: ell must be >= 1");
  std::vector<Vector> level{x};
  for (int l = 0; l < ell; ++l) {
    std::vector<Vector> next;
    next.reserve(level.size() * bank.operators.size());
    for (const auto& y : level)
      for (const auto& op : bank.operators) next.push_back((op * y).cwiseAbs());
    level = std::move(next);
  }
  double total = 0.0;
  for (const auto& y : level) total += wnorm2(y, degree);
  return total;
}

WaveletStabilityReport verify_wavelet_stability(const PerturbationPair& pair, std::span<const int> scales,
                                                double rel_tol) {
  WaveletStabilityReport r;
  r.q = pair_quantities(pair);
  const auto& q = r.q;
  const WaveletBank a = generalized_bank(q.ops.P, scales);
  const WaveletBank b = generalized_bank(q.ops_prime.P, scales);
  r.lhs = wavelet_difference_norm2(a, b, pair.g.degree);
  const double k = q.kr.kappa;
  const double R = q.kr.R;
  r.bracket = k * (1.0 + R * R * R) + R * q.dP_w + k * k * (k + 1.0) * (k + 1.0);
  r.c_hat = r.bracket > 0.0 ? r.lhs / r.bracket : 0.0;
  r.anomaly = r.bracket == 0.0 && r.lhs > 1e-12;

  double series_lhs = 0.0;
  double coeff = 0.0;
  const auto n = q.T_bar.rows();
  Matrix pa = Matrix::Identity(n, n);
  Matrix pb = Matrix::Identity(n, n);
  int done = 0;
  for (int t : scales) {
    for (; done < t; ++done) {
      pa = pa * q.T_bar;
      pb = pb * q.T_bar_prime;
    }
    const double d = opnorm(pa - pb);
    series_lhs += d * d;
    coeff += static_cast<double>(t) * t * std::pow(q.lambda2_star, 2.0 * t - 2.0);
  }
  const double dbar = opnorm(q.T_bar - q.T_bar_prime);
  r.checks.push_back(make_check("power_difference_series", series_lhs, coeff * dbar * dbar, rel_tol));
  r.checks.push_back(make_check("diffusion_difference", q.dT, k * (1.0 + R * R * R) + R * q.dP_w, rel_tol));
  CheckRecord lt2{"diffusion_difference_below_2", q.dT, 2.0, q.dT < 2.0, {}};
  r.checks.push_back(lt2);
  if (r.anomaly) r.checks.push_back({"wavelet_bracket_anomaly", r.lhs, 0.0, false, "bracket is 0 but wavelets differ"});
  return r;
}

std::vector<CheckRecord> verify_frame_nonexpansive(const WaveletBank& bank, const Vector& degree, int trials, Rng& rng,
                                                   double rel_tol) {
  std::vector<CheckRecord> out;
  for (int t = 0; t < trials; ++t) {
    const Vector x = random_signal(bank.size(), rng);
    double lhs = wnorm2(bank.lowpass * x, degree);
    for (const auto& op : bank.operators) lhs += wnorm2(op * x, degree);
    out.push_back(make_check("frame_nonexpansive", lhs, wnorm2(x, degree), rel_tol, "trial " + std::to_string(t)));
  }
  return out;
}

std::vector<CheckRecord> verify_nonexpansive_iterated(const WaveletBank& bank, const Vector& degree, int ell,
                                                      int trials, Rng& rng, double rel_tol) {
  std::vector<CheckRecord> out;
  for (int t = 0; t < trials; ++t) {
    const Vector x = random_signal(bank.size(), rng);
    out.push_back(make_check("iterated_nonexpansive_l" + std::to_string(ell), iterated_energy(bank, x, degree, ell),
                             wnorm2(x, degree), rel_tol, "trial " + std::to_string(t)));
  }
  return out;
}

std::vector<CheckRecord> verify_scattering_stability(const PerturbationPair& pair, const BankConfig& config, int ell,
                                                     int trials, Rng& rng, double rel_tol) {
  if (ell < 1) throw ArgumentError("verify_scattering_stability: ell must be >= 1");
  const DiffusionOperators ops = make_diffusion(pair.g);
  const DiffusionOperators ops_prime = make_diffusion(pair.g_prime);
  const WaveletBank a = config.build(ops.P);
  const WaveletBank b = config.build(ops_prime.P);
  const Vector& deg = pair.g.degree;
  const double A2 = wavelet_difference_norm2(a, b, deg);
  const double R = compute_kappa_R(pair.g.degree, pair.g_prime.degree).R;
  double geom = 0.0;
  for (int k = 0; k < ell; ++k) geom += std::pow(R, 2.0 * k);
  const int width = static_cast<int>(a.operators.size());

  std::vector<CheckRecord> out;
  for (int t = 0; t < trials; ++t) {
    const Vector x = random_signal(a.size(), rng);
    std::vector<Vector> ya{x}, yb{x};
    for (int l = 0; l < ell; ++l) {
      std::vector<Vector> na, nb;
      for (std::size_t i = 0; i < ya.size(); ++i)
        for (int j = 0; j < width; ++j) {
          na.push_back((a.operators[j] * ya[i]).cwiseAbs());
          nb.push_back((b.operators[j] * yb[i]).cwiseAbs());
        }
      ya = std::move(na);
      yb = std::move(nb);
    }
    double lhs = 0.0, worst = -1.0;
    std::size_t worst_index = 0;
    for (std::size_t i = 0; i < ya.size(); ++i) {
      const double d = wnorm2(ya[i] - yb[i], deg);
      lhs += d;
      if (d > worst) {
        worst = d;
        worst_index = i;
      }
    }
    std::vector<int> tuple(static_cast<std::size_t>(ell));
    for (int l = ell - 1; l >= 0; --l) {
      tuple[static_cast<std::size_t>(l)] = static_cast<int>(worst_index % width);
      worst_index /= width;
    }
    out.push_back(make_check("scattering_stability_l" + std::to_string(ell), lhs, A2 * geom * geom * wnorm2(x, deg),
                             rel_tol, "trial " + std::to_string(t) + " worst tuple " + join_tuple(tuple)));
  }
  return out;
}

std::vector<CheckRecord> verify_perm_equivariance(const ProteinGraph& g, const BankConfig& config, int trials, Rng& rng,
                                                  double tol) {
  const WaveletBank bank = config.build(lazy_walk(g.adjacency, g.degree));
  std::vector<CheckRecord> out;
  for (int t = 0; t < trials; ++t) {
    const auto perm = random_permutation(g.size(), rng);
    const Matrix pm = permutation_matrix(perm);
    Matrix x(g.size(), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const ProteinGraph h = permute_graph(g, perm);
    const WaveletBank bank_h = config.build(lazy_walk(h.adjacency, h.degree));
    const Matrix lhs = pm * scatter(bank, x).coeffs;
    const Matrix rhs = scatter(bank_h, pm * x).coeffs;
    const double diff = (lhs - rhs).cwiseAbs().maxCoeff();
    out.push_back({"perm_equivariance", diff, tol, diff <= tol, "trial " + std::to_string(t)});
  }
  return out;
}

std::size_t CampaignReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass; }));
}

CampaignReport run_campaign(const CampaignConfig& c) {
  if (c.n < 4 || c.trials < 1 || c.J < 1) throw ArgumentError("verify: need n >= 4, trials >= 1, J >= 1");
  Rng root(c.seed);
  CampaignReport report;
  std::vector<double> c_hat_max(4, 0.0);
  for (int trial = 0; trial < c.trials; ++trial) {
    Rng rng = root.split("pair-" + std::to_string(trial));
    TrajectoryFrame frame;
    frame.sequence = round_robin_sequence(static_cast<std::size_t>(c.n));
    PerturbationPair pair;
    for (int attempt = 0;; ++attempt) {
      frame.coords = random_chain(c.n, rng);
      try {
        pair = trial % 2 == 0 ? perturb_edges(build_knn_graph(frame, c.k), c.flips, rng)
                              : perturb_coordinates(frame, c.k, 0.5, rng);
        break;
      } catch (const GraphError&) {
        if (attempt > 100) throw;
      }
    }
    const std::string tag = "pair " + std::to_string(trial) + " (" + pair.description + ")";

    std::vector<int> scales;
    for (int j = 0; j <= c.J; ++j) scales.push_back(1 << j);
    auto ws = verify_wavelet_stability(pair, scales);
    for (auto& ch : ws.checks) {
      ch.detail = tag;
      report.checks.push_back(ch);
    }
    for (int J = 2; J <= 5 && c.j_sweep; ++J) {
      std::vector<int> sc;
      for (int j = 0; j <= J; ++j) sc.push_back(1 << j);
      const auto w = verify_wavelet_stability(pair, sc);
      c_hat_max[J - 2] = std::max(c_hat_max[J - 2], w.c_hat);
    }

    BankConfig bank;
    bank.J = c.J;
    for (int ell = 1; ell <= 2; ++ell)
      for (auto& ch : verify_scattering_stability(pair, bank, ell, 2, rng)) {
        ch.detail = tag + " " + ch.detail;
        report.checks.push_back(ch);
      }
    const WaveletBank pb = dyadic_bank(ws.q.ops.P, c.J);
    const WaveletBank tb = dyadic_bank(ws.q.ops.T, c.J);
    const Vector ones = Vector::Ones(c.n);
    for (auto& ch : verify_frame_nonexpansive(pb, pair.g.degree, 2, rng)) report.checks.push_back(ch);
    for (auto& ch : verify_frame_nonexpansive(tb, ones, 2, rng)) {
      ch.name = "frame_nonexpansive_T";
      report.checks.push_back(ch);
    }
    for (int ell = 1; ell <= 3; ++ell)
      for (auto& ch : verify_nonexpansive_iterated(pb, pair.g.degree, ell, 1, rng)) report.checks.push_back(ch);
    for (auto& ch : verify_perm_equivariance(pair.g, bank, 1, rng)) report.checks.push_back(ch);
  }
  if (!c.j_sweep) return report;
  for (int J = 2; J <= 5; ++J) report.c_hat_max_by_J.emplace_back(J, c_hat_max[J - 2]);
  const auto [lo, hi] = std::minmax_element(c_hat_max.begin(), c_hat_max.end());
  report.c_hat_spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  CheckRecord spread{"c_hat_J_spread", report.c_hat_spread, 3.0, report.c_hat_spread <= 3.0,
                     "max/min over J=2..5 of the worst C-hat"};
  report.checks.push_back(spread);
  return report;
}

void write_checks_csv(std::ostream& os, std::span<const CheckRecord> checks) {
  os << "name,lhs,rhs,ratio,pass\n";
  for (const auto& c : checks)
    os << c.name << ',' << format_double(c.lhs) << ',' << format_double(c.rhs) << ',' << format_double(c.ratio()) << ','
       << (c.pass ? 1 : 0) << '\n';
}

} // namespace pscape
