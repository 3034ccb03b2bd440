#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pscape/linalg.hpp"
#include "pscape/text_io.hpp"

namespace pscape {

/// The 20 standard amino acids, in one-hot column order.
inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr int kAlphabetSize = 20;

/// Column index of `code` in kAminoAcids, or -1 when it is not a standard code.
int amino_acid_index(char code) noexcept;

struct TrajectoryFrame {
  std::int64_t t = 0;
  Matrix coords;        // n x 3 residue centers
  std::string sequence; // n one-letter codes

  std::size_t size() const noexcept { return static_cast<std::size_t>(coords.rows()); }
};

struct Trajectory {
  std::string name;
  std::vector<TrajectoryFrame> frames;

  std::size_t residues() const { return frames.empty() ? 0 : frames.front().size(); }
  const std::string& sequence() const { return frames.front().sequence; }

  /// Throws ArgumentError when any invariant is violated: at least two
  /// frames, n >= 4, identical n and sequence across frames, standard codes,
  /// finite coordinates, strictly increasing t.
  void validate() const;
};

/// Reads the canonical text format:
///
///     PTRAJ v1 n=<int> frames=<int>
///     <sequence>
///     FRAME <t>
///     <x> <y> <z>        (n lines)
///     ...
///
/// Leading '#' comment lines (artifact headers) are skipped. Errors are
/// ParseError with the offending 1-based line number.
Trajectory parse_trajectory(std::istream& is, std::string name = "trajectory");
Trajectory parse_trajectory(const std::filesystem::path& path);

/// Writes the canonical format. Coordinates use the shortest decimal form that
/// round-trips exactly, so parse(write(x)) == x bitwise.
void write_trajectory(std::ostream& os, const Trajectory& traj,
                      const std::optional<ArtifactHeader>& header = std::nullopt);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                      const std::optional<ArtifactHeader>& header = std::nullopt);

// ---------------------------------------------------------------------------
// Synthetic generators

struct HingeParams {
  int n_per_arm = 5;
  int n_frames = 300;
  double theta_min = 0.3;
  double theta_max = 2.5;
  double noise_sigma = 0.1;
  double bond_length = 3.8;
  std::uint64_t seed = 0;
};

/// Hinge angle of the two-arm generator at frame t.
double hinge_angle(const HingeParams& p, std::int64_t t);

/// Noise-free bead positions for a given hinge angle: arm A lies on +x, arm B
/// is rotated by `theta` in the xy-plane about the pivot at the origin. Beads
/// are ordered A-tip ... A-pivot-side, B-pivot-side ... B-tip.
Matrix hinge_coordinates(int n_per_arm, double theta, double bond_length);

/// Sequence assigned round-robin over the 20 standard codes.
std::string round_robin_sequence(std::size_t n);

Trajectory synth_hinge(const HingeParams& p);

struct TwoStateParams {
  int n = 10;
  int n_frames = 300;
  double switch_prob = 0.05;
  double theta_open = 2.2;
  double theta_closed = 0.7;
  double noise_sigma = 0.1;
  double bond_length = 3.8;
  std::uint64_t seed = 0;
};

struct LabeledTrajectory {
  Trajectory trajectory;
  std::vector<int> states; // 0 = open, 1 = closed, one entry per frame
};

/// Markov switching between an open and a closed hinge angle; starts open.
LabeledTrajectory synth_two_state_labeled(const TwoStateParams& p);
Trajectory synth_two_state(const TwoStateParams& p);

} // namespace pscape
