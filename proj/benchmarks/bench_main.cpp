#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "pscape/diffusion_ops.hpp"
#include "pscape/graph_builder.hpp"
#include "pscape/model.hpp"
#include "pscape/scattering.hpp"
#include "pscape/stability.hpp"
#include "pscape/training.hpp"
#include "pscape/trajectory_io.hpp"

namespace {

pscape::Trajectory hinge(int n_per_arm, int frames) {
  pscape::HingeParams p;
  p.n_per_arm = n_per_arm;
  p.n_frames = frames;
  p.seed = 1;
  return pscape::synth_hinge(p);
}

std::vector<int> first_frames(int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void BM_KnnGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  pscape::Rng rng(1);
  pscape::TrajectoryFrame f;
  f.coords = pscape::random_chain(n, rng);
  f.sequence = pscape::round_robin_sequence(static_cast<std::size_t>(n));
  for (auto _ : state) benchmark::DoNotOptimize(pscape::build_knn_graph(f, 5));
}
BENCHMARK(BM_KnnGraph)->Arg(50)->Arg(200)->Arg(800);

void BM_Scatter(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  pscape::Rng rng(2);
  const pscape::ProteinGraph g = pscape::random_chain_graph(n, 5, rng);
  const pscape::Matrix P = pscape::lazy_walk(g.adjacency, g.degree);
  for (auto _ : state) {
    const pscape::WaveletBank bank = pscape::dyadic_bank(P, 4);
    benchmark::DoNotOptimize(pscape::scatter(bank, g.signal));
  }
}
BENCHMARK(BM_Scatter)->Arg(20)->Arg(100)->Arg(300);

void BM_ForwardBackward(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const pscape::Trajectory traj = hinge(5, frames);
  pscape::ModelConfig c;
  c.n = 10;
  pscape::Rng rng(3);
  pscape::ModelParams params = pscape::init_params(c, rng);
  const auto idx = first_frames(frames);
  params.norm = pscape::fit_normalization(traj, idx);
  const pscape::PreparedBatch batch = pscape::prepare_frames(traj, idx, c);
  for (auto _ : state) {
    pscape::ad::Tape tape;
    const pscape::ParamVars vars(tape, params, true);
    const auto l = pscape::loss(pscape::forward(vars, c, batch), params, batch);
    tape.backward(l.total);
    benchmark::DoNotOptimize(l.total.scalar());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PrepareFrames(benchmark::State& state) {
  const pscape::Trajectory traj = hinge(5, 256);
  pscape::ModelConfig c;
  c.n = 10;
  const auto idx = first_frames(256);
  for (auto _ : state) benchmark::DoNotOptimize(pscape::prepare_frames(traj, idx, c));
}
BENCHMARK(BM_PrepareFrames)->Unit(benchmark::kMillisecond);

void BM_WaveletStability(benchmark::State& state) {
  pscape::Rng rng(4);
  const pscape::PerturbationPair pair = pscape::perturb_edges(pscape::random_chain_graph(30, 5, rng), 2, rng);
  const std::vector<int> scales{1, 2, 4, 8};
  for (auto _ : state) benchmark::DoNotOptimize(pscape::verify_wavelet_stability(pair, scales));
}
BENCHMARK(BM_WaveletStability)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
