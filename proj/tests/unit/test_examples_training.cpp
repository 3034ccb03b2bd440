#include <doctest.h>

#include <numeric>

#include "../support.hpp"
#include "pscape/evaluation.hpp"
#include "pscape/training.hpp"

using namespace pscape;
using namespace testing_support;

TEST_CASE("noise-free toy hinge: 200 epochs cut the loss at least tenfold") {
  HingeParams hp;
  hp.n_per_arm = 5;
  hp.n_frames = 60;
  hp.noise_sigma = 0.0;
  const Trajectory traj = synth_hinge(hp);
  ModelConfig c;
  c.n = 10;
  c.k = 5;
  TrainConfig tc;
  tc.epochs = 200;
  tc.lr = 1e-3;
  const SplitPlan split = make_split(60, 3, 5, 1);
  const TrainResult r = train(traj, split.train_frames, c, tc);
  REQUIRE(r.curve.size() == 200u);
  const double ratio = r.curve.front().total / r.curve.back().total;
  MESSAGE("loss ratio " << ratio);
  CHECK(ratio >= 10.0);
}

TEST_CASE("mutant at an arm tip stays inside the wild-type latent cloud") {
  HingeParams wild_params;
  wild_params.seed = 1;
  const Trajectory wild = synth_hinge(wild_params);
  HingeParams mutant_params = wild_params;
  mutant_params.seed = 2;
  Trajectory mutant = synth_hinge(mutant_params);
  for (auto& f : mutant.frames) f.sequence[0] = f.sequence[0] == 'W' ? 'A' : 'W';
  ModelConfig c;
  c.n = 10;
  TrainConfig tc;
  tc.seed = 1;
  const GeneralizationReport g = wild_to_mutant(wild, mutant, make_split(300, 20, 5, 1), c, tc);
  REQUIRE(g.overlap_ratio.has_value());
  MESSAGE("overlap ratio " << *g.overlap_ratio);
  CHECK(*g.overlap_ratio <= 2.0);
}

TEST_CASE("short-to-long: time ordering of the unseen frames") {
  HingeParams hp;
  hp.n_frames = 10000;
  hp.seed = 1;
  const Trajectory traj = synth_hinge(hp);
  ModelConfig c;
  c.n = 10;
  TrainConfig tc;
  tc.seed = 1;
  const GeneralizationReport g = short_to_long(traj, 1000, c, tc);
  MESSAGE("unseen-frame time Spearman " << g.metrics.time_spearman);
  CHECK(g.metrics.time_spearman >= 0.8);
}
