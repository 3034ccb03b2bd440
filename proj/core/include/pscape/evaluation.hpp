#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pscape/model.hpp"
#include "pscape/training.hpp"

namespace pscape {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0; // population
};

MeanStd mean_std(std::span<const double> values);

struct WindowMetrics {
  int start = 0;
  int length = 0;
  double mae_pairdist = 0.0;
  double mae_dihedral = 0.0;
};

struct MetricsReport {
  MeanStd mae_pairdist;
  MeanStd mae_dihedral;
  double scc = 0.0; // Spearman, pooled withheld pairwise distances
  double pcc = 0.0; // Pearson, same pool
  std::optional<double> rmsd; // coordinate head only
  double dirichlet = 0.0;     // time signal on the latent k-NN graph
  double dirichlet_raw = 0.0; // time signal on the k-NN graph of flattened scattering features
  double time_mse = 0.0;      // withheld frames, original time units
  double time_spearman = 0.0; // withheld frames
  double pairdist_entry_std = 0.0; // ground truth, mean over entries of the std across all frames
  std::vector<WindowMetrics> windows;
};

/// Structure metrics only. `predicted`, `truth` and `truth_coords` line up
/// with `split.test_frames`; truth_coords may be empty when no prediction
/// carries coordinates.
MetricsReport score_predictions(std::span<const DecodedStructure> predicted, std::span<const StructureTargets> truth,
                                std::span<const Matrix> truth_coords, const SplitPlan& split);

/// Full report: decodes withheld latents, scores them, and adds the time and
/// Dirichlet metrics computed over every frame of `traj`.
MetricsReport evaluate(const ModelParams& params, const Trajectory& traj, const SplitPlan& split, int k = 5);

/// Same, reusing an embedding of all frames of `traj` (row i = frame i).
MetricsReport evaluate_embedding(const ModelParams& params, const Trajectory& traj, const SplitPlan& split,
                                 const Embedding& all_frames, int k = 5);

/// x^T L x / x^T x with L = D - A.
double dirichlet_energy(const Matrix& adjacency, const Eigen::VectorXd& signal);

/// Same on the symmetrized k-NN graph of the rows of `points`. Throws
/// NumericError("latents collapsed") when the points have variance < 1e-12.
double dirichlet_energy_knn(const Matrix& points, const Eigen::VectorXd& signal, int k);

/// Average ranks for ties.
Eigen::VectorXd ranks(std::span<const double> values);
double spearman(std::span<const double> a, std::span<const double> b);
double pearson(std::span<const double> a, std::span<const double> b);

/// Optimal-rotation RMSD after centering both point sets.
double kabsch_rmsd(const Matrix& a, const Matrix& b);

struct Clustering {
  Matrix centroids;            // k x d
  std::vector<int> assignment; // one per row
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded
/// from the farthest point; throws NumericError if that keeps failing.
Clustering kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 300);

/// Fraction of points whose label matches under the best relabeling of
/// clusters (k <= 8).
double label_agreement(std::span<const int> assignment, std::span<const int> labels, int k);

/// Decoded structures along the straight line from z_a to z_b (steps >= 2).
std::vector<DecodedStructure> interpolate_latents(const ModelParams& params, const Eigen::RowVectorXd& z_a,
                                                  const Eigen::RowVectorXd& z_b, int steps);

struct AttentionReadout {
  Eigen::VectorXd scores;      // n, frame- and head-averaged, sums to 1
  Eigen::VectorXd flexibility; // n, positional variance after centering each frame
  double spearman = 0.0;
};

AttentionReadout attention_readout(const ModelParams& params, const Trajectory& traj);
/// Same, from an existing embedding of every frame.
AttentionReadout attention_readout(const Embedding& all_frames, const Trajectory& traj);

/// Per-residue variance of centered coordinates across frames.
Eigen::VectorXd positional_variance(const Trajectory& traj);

struct GeneralizationReport {
  MetricsReport metrics;
  std::optional<double> overlap_ratio; // mean cross-run latent distance / within-run spread
};

/// Trains on `train_traj[0, train_count)` and evaluates the remaining frames
/// of the same trajectory as a single held-out block.
GeneralizationReport short_to_long(const Trajectory& traj, int train_count, const ModelConfig& model,
                                   const TrainConfig& train, int k = 5);

/// Trains on the first trajectory (withheld windows from `split`), then embeds
/// both and compares latent clouds. The sequences must have equal length.
GeneralizationReport wild_to_mutant(const Trajectory& wild, const Trajectory& mutant, const SplitPlan& split,
                                    const ModelConfig& model, const TrainConfig& train, int k = 5);

/// Mean pairwise distance between the two clouds divided by the mean
/// within-cloud pairwise distance of `a`.
double latent_overlap_ratio(const Matrix& a, const Matrix& b);

/// Projection onto the top two principal components (power iteration).
Matrix pca_2d(const Matrix& points, std::uint64_t seed = 0);

/// Flat `key = value` report.
std::vector<std::pair<std::string, std::string>> metrics_pairs(const MetricsReport& report);
/// `start,length,mae_pairdist,mae_dihedral` rows.
void write_window_csv(std::ostream& os, const MetricsReport& report);
struct LatentTable {
  std::vector<int> frames;
  std::vector<std::int64_t> t;
  Matrix z;
};

/// `frame,t,z_0..z_(d-1)` rows.
LatentTable read_latents_csv(std::istream& is);
void write_latents_csv(std::ostream& os, const Embedding& embedding, std::span<const int> frames);

} // namespace pscape
