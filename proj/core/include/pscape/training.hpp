#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "pscape/model.hpp"

namespace pscape {

/// Withheld contiguous windows of frames; the rest is the training set.
struct SplitPlan {
  std::vector<std::pair<int, int>> windows; // (start, length), sorted by start
  std::vector<int> train_frames;
  std::vector<int> test_frames;
};

/// Windows placed uniformly at random without overlap (rejection sampling).
/// Requires n_windows * window_len <= n_frames / 2.
SplitPlan make_split(int n_frames, int n_windows, int window_len, std::uint64_t seed);

/// First `train_count` frames train, the rest are withheld in consecutive
/// windows of `window_len` (the last one may be shorter).
SplitPlan prefix_split(int n_frames, int train_count, int window_len);

struct TrainConfig {
  int epochs = 500;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  /// Called after every epoch with (epoch, loss terms before the update).
  std::function<void(int, const LossTerms&)> on_epoch;
};

/// Adam over a list of named tensors.
class Adam {
public:
  Adam(const ModelParams& params, const TrainConfig& config);
  /// grads must line up with params.tensors.
  void step(ModelParams& params, std::span<const Matrix> grads);

private:
  TrainConfig config_;
  std::vector<Matrix> m_, v_;
  int t_ = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossTerms> curve; // one entry per epoch
  std::vector<double> expected_scales;
  bool scales_increasing = true;
};

/// Full-batch training on `train_frames`. Parameters are initialized from
/// Rng(seed).split("init"); normalization is fitted on the training frames.
/// Throws NumericError naming the loss term that turned non-finite.
TrainResult train(const Trajectory& traj, std::span<const int> train_frames, const ModelConfig& model,
                  const TrainConfig& config);

/// Continues from existing parameters (normalization kept).
TrainResult train_from(ModelParams params, const Trajectory& traj, std::span<const int> train_frames,
                       const TrainConfig& config);

/// `start,length` rows; the reader rebuilds train/test lists for n_frames.
void write_split_csv(std::ostream& os, const SplitPlan& plan);
SplitPlan read_split_csv(std::istream& is, int n_frames);

/// `epoch,total,time,structure,scattering,node` rows.
void write_curve_csv(std::ostream& os, std::span<const LossTerms> curve);

} // namespace pscape
