#include <cmath>
#include <numbers>

#include "pscape/error.hpp"
#include "pscape/rng.hpp"
#include "pscape/trajectory_io.hpp"

namespace pscape {

double hinge_angle(const HingeParams& p, std::int64_t t) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(p.n_frames);
  return p.theta_min + (p.theta_max - p.theta_min) * (1.0 + std::sin(phase)) / 2.0;
}

Matrix hinge_coordinates(int n_per_arm, double theta, double bond_length) {
  Matrix x = Matrix::Zero(2 * n_per_arm, 3);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (int i = 0; i < n_per_arm; ++i) {
    const double r_a = bond_length * (n_per_arm - i); // arm A, tip first
    x(i, 0) = r_a;
    const double r_b = bond_length * (i + 1); // arm B, pivot side first
    x(n_per_arm + i, 0) = r_b * c;
    x(n_per_arm + i, 1) = r_b * s;
  }
  return x;
}

std::string round_robin_sequence(std::size_t n) {
  std::string seq(n, 'A');
  for (std::size_t i = 0; i < n; ++i) seq[i] = kAminoAcids[i % kAminoAcids.size()];
  return seq;
}

namespace {

void add_jitter(Matrix& x, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index d = 0; d < 3; ++d) x(i, d) += rng.normal(0.0, sigma);
}

} // namespace

Trajectory synth_hinge(const HingeParams& p) {
  if (p.n_per_arm < 2) throw ArgumentError("synth_hinge: n_per_arm must be >= 2");
  if (p.n_frames < 2) throw ArgumentError("synth_hinge: n_frames must be >= 2");
  if (!(p.theta_min > 0.0 && p.theta_min < p.theta_max && p.theta_max < std::numbers::pi))
    throw ArgumentError("synth_hinge: need 0 < theta_min < theta_max < pi");
  if (p.noise_sigma < 0.0) throw ArgumentError("synth_hinge: noise_sigma must be >= 0");

  Rng rng = Rng(p.seed).split("hinge-jitter");
  Trajectory traj;
  traj.name = "hinge";
  const std::string seq = round_robin_sequence(static_cast<std::size_t>(2 * p.n_per_arm));
  traj.frames.reserve(static_cast<std::size_t>(p.n_frames));
  for (int t = 0; t < p.n_frames; ++t) {
    TrajectoryFrame fr;
    fr.t = t;
    fr.sequence = seq;
    fr.coords = hinge_coordinates(p.n_per_arm, hinge_angle(p, t), p.bond_length);
    add_jitter(fr.coords, p.noise_sigma, rng);
    traj.frames.push_back(std::move(fr));
  }
  return traj;
}

LabeledTrajectory synth_two_state_labeled(const TwoStateParams& p) {
  if (!(p.switch_prob > 0.0 && p.switch_prob < 1.0))
    throw ArgumentError("synth_two_state: switch_prob must lie in (0, 1)");
  if (p.n < 4 || p.n % 2 != 0) throw ArgumentError("synth_two_state: n must be even and >= 4");
  if (p.n_frames < 2) throw ArgumentError("synth_two_state: n_frames must be >= 2");

  Rng chain = Rng(p.seed).split("two-state-chain");
  Rng jitter = Rng(p.seed).split("two-state-jitter");
  const int per_arm = p.n / 2;
  const std::string seq = round_robin_sequence(static_cast<std::size_t>(p.n));

  LabeledTrajectory out;
  out.trajectory.name = "two_state";
  int state = 0;
  for (int t = 0; t < p.n_frames; ++t) {
    if (t > 0 && chain.bernoulli(p.switch_prob)) state = 1 - state;
    TrajectoryFrame fr;
    fr.t = t;
    fr.sequence = seq;
    fr.coords = hinge_coordinates(per_arm, state == 0 ? p.theta_open : p.theta_closed, p.bond_length);
    add_jitter(fr.coords, p.noise_sigma, jitter);
    out.trajectory.frames.push_back(std::move(fr));
    out.states.push_back(state);
  }
  return out;
}

Trajectory synth_two_state(const TwoStateParams& p) { return synth_two_state_labeled(p).trajectory; }

} // namespace pscape
