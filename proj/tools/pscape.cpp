// pscape: command-line front end for the pscape library.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pscape/checkpoint.hpp"
#include "pscape/diffusion_ops.hpp"
#include "pscape/error.hpp"
#include "pscape/evaluation.hpp"
#include "pscape/graph_builder.hpp"
#include "pscape/scattering.hpp"
#include "pscape/stability.hpp"
#include "pscape/structure.hpp"
#include "pscape/text_io.hpp"
#include "pscape/training.hpp"
#include "pscape/trajectory_io.hpp"

namespace fs = std::filesystem;
using namespace pscape;

namespace {

struct Common {
  CLI::App* app = nullptr;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string config;
};

void add_common(CLI::App* sub, Common& c, std::uint64_t default_seed = 0) {
  c.app = sub;
  c.seed = default_seed;
  sub->add_option("-o,--out-dir", c.out_dir, "Directory that receives every output file")->capture_default_str();
  sub->add_option("--seed", c.seed, "Seed for all randomness in this run")->capture_default_str();
  sub->add_option("--config", c.config, "Flat 'key = value' file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
}

bool given_on_command_line(const CLI::App& sub, const std::vector<std::string>& args, std::size_t from,
                           const std::string& key) {
  std::vector<std::string> spellings{"--" + key};
  if (const CLI::Option* opt = sub.get_option_no_throw("--" + key))
    for (const auto& sn : opt->get_snames()) spellings.push_back("-" + sn);
  for (std::size_t i = from; i < args.size(); ++i)
    for (const auto& sp : spellings)
      if (args[i] == sp || args[i].rfind(sp + "=", 0) == 0) return true;
  return false;
}

/// Appends `--key=value` for every config-file entry the command line does not
/// already set. Missing or unreadable files are left for the parser to report.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  std::size_t sub_at = args.size();
  const CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size() && !sub; ++i)
    if (args[i].empty() || args[i][0] != '-') {
      sub = app.get_subcommand_no_throw(args[i]);
      sub_at = i;
    }
  if (!sub) return args;
  std::string path;
  for (std::size_t i = sub_at + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream is(path);
  if (!is) return args;
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_key_values(is))
    if (!given_on_command_line(*sub, args, sub_at + 1, key)) extra.push_back("--" + key + "=" + value);
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(1, sep) : "") + parts[i];
  return out;
}

std::vector<std::pair<std::string, std::string>> echo_config(const CLI::App& app) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const CLI::Option* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty()) continue;
    const std::string& key = names.front();
    if (key == "help" || key == "config" || key == "out-dir" || key == "seed") continue;
    kv.emplace_back(key, opt->count() > 0 ? join(opt->results(), ',') : opt->get_default_str());
  }
  return kv;
}

ArtifactHeader header_for(const Common& c) { return {"pscape", c.app->get_name(), c.seed, echo_config(*c.app), true}; }

fs::path output_path(const Common& c, const std::string& name) {
  if (fs::path(name).has_parent_path() || name.empty() || name == "." || name == "..")
    throw ArgumentError("output name '" + name + "' must be a plain file name");
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

std::ofstream open_output(const Common& c, const std::string& name) {
  const fs::path p = output_path(c, name);
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  write_header(os, header_for(c));
  return os;
}

void write_kv_file(const Common& c, const std::string& name, const std::vector<std::pair<std::string, std::string>>& kv) {
  auto os = open_output(c, name);
  write_key_values(os, kv);
}

std::vector<int> all_frames(const Trajectory& traj) {
  std::vector<int> v(traj.frames.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

ModelParams load_checkpoint(const std::string& path) { return read_checkpoint(fs::path(path)); }

void require_matching(const ModelParams& params, const Trajectory& traj) {
  if (static_cast<int>(traj.residues()) != params.config.n)
    throw ArgumentError("trajectory has " + std::to_string(traj.residues()) + " residues but the checkpoint expects " +
                        std::to_string(params.config.n));
}

LatentTable load_latents(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open " + path);
  return read_latents_csv(is);
}

void structure_header(std::ostream& os, const std::string& lead, const ModelConfig& c) {
  os << lead;
  for (int i = 0; i < c.n; ++i)
    for (int j = i + 1; j < c.n; ++j) os << ",pd_" << i << '_' << j;
  for (int i = 0; i < c.n - 3; ++i)
    for (int j = i + 1; j < c.n - 3; ++j) os << ",dih_" << i << '_' << j;
  if (c.coord_head)
    for (int i = 0; i < c.n; ++i) os << ",x_" << i << ",y_" << i << ",z_" << i;
  os << '\n';
}

void structure_row(std::ostream& os, const DecodedStructure& d) {
  const auto pd = upper_triangle(d.pairdist);
  for (Eigen::Index i = 0; i < pd.size(); ++i) os << ',' << format_double(pd(i));
  const auto dih = upper_triangle(d.dihedral_diff);
  for (Eigen::Index i = 0; i < dih.size(); ++i) os << ',' << format_double(dih(i));
  if (d.coords)
    for (Eigen::Index r = 0; r < d.coords->rows(); ++r)
      for (Eigen::Index k = 0; k < 3; ++k) os << ',' << format_double((*d.coords)(r, k));
  os << '\n';
}

// ---------------------------------------------------------------------------

struct GenOptions {
  Common c;
  bool hinge = false;
  bool two_state = false;
  int frames = 300;
  int n_per_arm = 5;
  int n = 10;
  double theta_min = 0.3;
  double theta_max = 2.5;
  double theta_open = 2.2;
  double theta_closed = 0.7;
  double noise = 0.1;
  double switch_prob = 0.05;
  double bond_length = 3.8;
  std::string mutate;
  std::string name = "trajectory.ptraj";
};

void apply_mutation(Trajectory& traj, const std::string& mutation) {
  const auto colon = mutation.find(':');
  long long pos = 0;
  if (colon == std::string::npos || colon + 2 != mutation.size() || !parse_int(mutation.substr(0, colon), pos))
    throw ArgumentError("--mutate expects POSITION:CODE, e.g. 4:W");
  if (pos < 0 || pos >= static_cast<long long>(traj.residues())) throw ArgumentError("--mutate position out of range");
  for (auto& f : traj.frames) f.sequence[static_cast<std::size_t>(pos)] = mutation.back();
  traj.validate();
}

int run_gen(const GenOptions& o) {
  Trajectory traj;
  std::vector<int> states;
  if (o.two_state) {
    TwoStateParams p;
    p.n = o.n;
    p.n_frames = o.frames;
    p.switch_prob = o.switch_prob;
    p.theta_open = o.theta_open;
    p.theta_closed = o.theta_closed;
    p.noise_sigma = o.noise;
    p.bond_length = o.bond_length;
    p.seed = o.c.seed;
    auto labeled = synth_two_state_labeled(p);
    traj = std::move(labeled.trajectory);
    states = std::move(labeled.states);
  } else {
    HingeParams p;
    p.n_per_arm = o.n_per_arm;
    p.n_frames = o.frames;
    p.theta_min = o.theta_min;
    p.theta_max = o.theta_max;
    p.noise_sigma = o.noise;
    p.bond_length = o.bond_length;
    p.seed = o.c.seed;
    traj = synth_hinge(p);
  }
  if (!o.mutate.empty()) apply_mutation(traj, o.mutate);
  write_trajectory(output_path(o.c, o.name), traj, header_for(o.c));
  if (!states.empty()) {
    auto os = open_output(o.c, "states.csv");
    os << "frame,t,state\n";
    for (std::size_t i = 0; i < states.size(); ++i) os << i << ',' << traj.frames[i].t << ',' << states[i] << '\n';
  }
  std::cout << "wrote " << traj.frames.size() << " frames of " << traj.residues() << " residues\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct IngestOptions {
  Common c;
  std::string input;
};

int run_ingest(const IngestOptions& o) {
  const Trajectory traj = parse_trajectory(fs::path(o.input));
  double bond_min = std::numeric_limits<double>::infinity();
  double bond_max = 0.0;
  for (const auto& f : traj.frames)
    for (Eigen::Index i = 0; i + 1 < f.coords.rows(); ++i) {
      const double d = (f.coords.row(i + 1) - f.coords.row(i)).norm();
      bond_min = std::min(bond_min, d);
      bond_max = std::max(bond_max, d);
    }
  write_kv_file(o.c, "ingest_report.txt",
                {{"status", "ok"},
                 {"frames", std::to_string(traj.frames.size())},
                 {"residues", std::to_string(traj.residues())},
                 {"sequence", traj.sequence()},
                 {"t_first", std::to_string(traj.frames.front().t)},
                 {"t_last", std::to_string(traj.frames.back().t)},
                 {"consecutive_distance_min", format_double(bond_min)},
                 {"consecutive_distance_max", format_double(bond_max)}});
  std::cout << "ok: " << traj.frames.size() << " frames, " << traj.residues() << " residues\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ScatterOptions {
  Common c;
  std::string input;
  std::vector<int> frames{0};
  bool all = false;
  int k = 5;
  int J = 4;
  std::vector<int> scales;
};

int run_scatter(const ScatterOptions& o) {
  const Trajectory traj = parse_trajectory(fs::path(o.input));
  const std::vector<int> frames = o.all ? all_frames(traj) : o.frames;
  BankConfig bank;
  bank.J = o.J;
  bank.scales = o.scales;
  for (int f : frames) {
    if (f < 0 || f >= static_cast<int>(traj.frames.size())) throw ArgumentError("frame " + std::to_string(f) + " out of range");
    const ProteinGraph g = build_knn_graph(traj.frames[static_cast<std::size_t>(f)], o.k);
    const ScatteringOutput out = scatter(bank.build(lazy_walk(g.adjacency, g.degree)), g.signal);
    auto os = open_output(o.c, "scatter_" + std::to_string(f) + ".csv");
    write_scattering_csv(os, out);
  }
  std::cout << "wrote " << frames.size() << " scattering table(s)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  Common c;
  std::string input;
  ModelConfig model;
  TrainConfig train;
  std::string node_mode = "auto";
  int windows = 20;
  int window_len = 5;
  bool quiet = false;
};

void add_model_options(CLI::App* sub, ModelConfig& m) {
  sub->add_option("--k", m.k, "k of the per-frame k-NN graph")->capture_default_str();
  sub->add_option("--J", m.J, "Number of wavelet scales minus one")->capture_default_str();
  sub->add_option("--t-max", m.t_max, "Largest diffusion power in the learnable bank")->capture_default_str();
  sub->add_option("--latent-dim", m.latent_dim)->capture_default_str();
  sub->add_option("--heads", m.heads)->capture_default_str();
  sub->add_option("--head-dim", m.head_dim)->capture_default_str();
  sub->add_option("--hidden", m.hidden)->capture_default_str();
  sub->add_option("--alpha", m.alpha, "Time-regression loss weight")->capture_default_str();
  sub->add_option("--beta", m.beta, "Scattering-reconstruction loss weight")->capture_default_str();
  sub->add_option("--gamma", m.gamma, "Node-embedding loss weight")->capture_default_str();
  sub->add_flag("--coord-head", m.coord_head, "Also decode centered coordinates");
  sub->add_flag("--plus-beta-structure", m.plus_beta_structure, "Structure weight 1 - alpha + beta");
}

int run_train(TrainOptions& o) {
  const Trajectory traj = parse_trajectory(fs::path(o.input));
  o.model.n = static_cast<int>(traj.residues());
  o.model.node_embedding = o.node_mode == "on" || (o.node_mode == "auto" && o.model.n > kNodeEmbeddingThreshold);
  o.model.validate();
  const SplitPlan split = make_split(static_cast<int>(traj.frames.size()), o.windows, o.window_len, o.c.seed);
  o.train.seed = o.c.seed;
  if (!o.quiet)
    o.train.on_epoch = [total = o.train.epochs](int epoch, const LossTerms& l) {
      if (epoch == 1 || epoch % 50 == 0 || epoch == total)
        std::cerr << "epoch " << epoch << "/" << total << " loss " << l.total << '\n';
    };
  const TrainResult result = train(traj, split.train_frames, o.model, o.train);

  {
    const fs::path p = output_path(o.c, "checkpoint.ckpt");
    write_checkpoint(p, result.params, header_for(o.c));
  }
  {
    auto os = open_output(o.c, "curve.csv");
    write_curve_csv(os, result.curve);
  }
  {
    auto os = open_output(o.c, "split.csv");
    write_split_csv(os, split);
  }
  std::vector<std::string> scales;
  for (double s : result.expected_scales) scales.push_back(format_double(s));
  const LossTerms last = result.curve.empty() ? LossTerms{} : result.curve.back();
  write_kv_file(o.c, "train_summary.txt",
                {{"epochs", std::to_string(result.curve.size())},
                 {"train_frames", std::to_string(split.train_frames.size())},
                 {"test_frames", std::to_string(split.test_frames.size())},
                 {"parameters", std::to_string(result.params.parameter_count())},
                 {"final_total", format_double(last.total)},
                 {"final_time", format_double(last.time)},
                 {"final_structure", format_double(last.structure)},
                 {"final_scattering", format_double(last.scattering)},
                 {"final_node", format_double(last.node)},
                 {"expected_scales", join(scales, ' ')},
                 {"scales_increasing", result.scales_increasing ? "true" : "false"}});
  std::cout << "trained " << result.curve.size() << " epochs, final loss " << last.total << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EmbedOptions {
  Common c;
  std::string input;
  std::string checkpoint;
};

int run_embed(const EmbedOptions& o) {
  const Trajectory traj = parse_trajectory(fs::path(o.input));
  const ModelParams params = load_checkpoint(o.checkpoint);
  require_matching(params, traj);
  const auto frames = all_frames(traj);
  const Embedding e = embed(params, traj, frames);
  {
    auto os = open_output(o.c, "latents.csv");
    write_latents_csv(os, e, frames);
  }
  auto os = open_output(o.c, "time.csv");
  os << "frame,t,t_hat\n";
  for (std::size_t i = 0; i < frames.size(); ++i)
    os << frames[i] << ',' << e.t[i] << ',' << format_double(e.t_hat(static_cast<Eigen::Index>(i))) << '\n';
  std::cout << "embedded " << frames.size() << " frames\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DecodeOptions {
  Common c;
  std::string checkpoint;
  std::string latents;
};

int run_decode(const DecodeOptions& o) {
  const ModelParams params = load_checkpoint(o.checkpoint);
  const LatentTable table = load_latents(o.latents);
  auto os = open_output(o.c, "decoded.csv");
  structure_header(os, "frame,t", params.config);
  for (std::size_t i = 0; i < table.frames.size(); ++i) {
    os << table.frames[i] << ',' << table.t[i];
    structure_row(os, decode_latent(params, table.z.row(static_cast<Eigen::Index>(i))));
  }
  std::cout << "decoded " << table.frames.size() << " latents\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct InterpolateOptions {
  Common c;
  std::string checkpoint;
  std::string latents;
  int steps = 10;
  int from = -1;
  int to = -1;
  int clusters = 2;
};

int run_interpolate(const InterpolateOptions& o) {
  const ModelParams params = load_checkpoint(o.checkpoint);
  const LatentTable table = load_latents(o.latents);
  Eigen::RowVectorXd za, zb;
  if (o.from >= 0 || o.to >= 0) {
    auto row_of = [&](int frame) {
      const auto it = std::find(table.frames.begin(), table.frames.end(), frame);
      if (it == table.frames.end()) throw ArgumentError("frame " + std::to_string(frame) + " not in latent file");
      return table.z.row(it - table.frames.begin()).eval();
    };
    if (o.from < 0 || o.to < 0) throw ArgumentError("--from and --to must be given together");
    za = row_of(o.from);
    zb = row_of(o.to);
  } else {
    const Clustering cl = kmeans(table.z, o.clusters, o.c.seed);
    za = cl.centroids.row(0);
    zb = cl.centroids.row(o.clusters - 1);
    auto os = open_output(o.c, "clusters.csv");
    os << "frame,t,cluster\n";
    for (std::size_t i = 0; i < table.frames.size(); ++i)
      os << table.frames[i] << ',' << table.t[i] << ',' << cl.assignment[i] << '\n';
  }
  const auto path = interpolate_latents(params, za, zb, o.steps);
  auto os = open_output(o.c, "interpolation.csv");
  structure_header(os, "step,w", params.config);
  for (std::size_t s = 0; s < path.size(); ++s) {
    os << s << ',' << format_double(static_cast<double>(s) / static_cast<double>(path.size() - 1));
    structure_row(os, path[s]);
  }
  std::cout << "decoded " << path.size() << " interpolation steps\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct MetricsOptions {
  Common c;
  std::string input;
  std::string checkpoint;
  std::string split;
  int windows = 20;
  int window_len = 5;
  int knn = 5;
  bool pca = false;
};

int run_metrics(const MetricsOptions& o) {
  const Trajectory traj = parse_trajectory(fs::path(o.input));
  const ModelParams params = load_checkpoint(o.checkpoint);
  require_matching(params, traj);
  const int n_frames = static_cast<int>(traj.frames.size());
  SplitPlan split;
  if (!o.split.empty()) {
    std::ifstream is(o.split);
    if (!is) throw ArgumentError("cannot open " + o.split);
    split = read_split_csv(is, n_frames);
  } else {
    split = make_split(n_frames, o.windows, o.window_len, o.c.seed);
  }
  const auto frames = all_frames(traj);
  const Embedding e = embed(params, traj, frames);
  const MetricsReport report = evaluate_embedding(params, traj, split, e, o.knn);
  const AttentionReadout readout = attention_readout(e, traj);

  auto kv = metrics_pairs(report);
  kv.emplace_back("attention_spearman", format_double(readout.spearman));
  write_kv_file(o.c, "metrics.txt", kv);
  {
    auto os = open_output(o.c, "metrics_windows.csv");
    write_window_csv(os, report);
  }
  {
    auto os = open_output(o.c, "attention.csv");
    os << "residue,score,flexibility\n";
    for (Eigen::Index i = 0; i < readout.scores.size(); ++i)
      os << i << ',' << format_double(readout.scores(i)) << ',' << format_double(readout.flexibility(i)) << '\n';
  }
  if (o.pca) {
    const Matrix proj = pca_2d(e.z, o.c.seed);
    auto os = open_output(o.c, "pca.csv");
    os << "frame,t,pc_0,pc_1\n";
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      os << frames[i] << ',' << e.t[i] << ',' << format_double(proj(r, 0)) << ',' << format_double(proj(r, 1)) << '\n';
    }
  }
  for (const auto& [k, v] : kv) std::cout << k << " = " << v << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  Common c;
  CampaignConfig campaign;
  bool all = false;
};

int run_verify(VerifyOptions& o) {
  o.campaign.seed = o.c.seed;
  o.campaign.j_sweep = o.all;
  const CampaignReport report = run_campaign(o.campaign);
  {
    auto os = open_output(o.c, "verify_checks.csv");
    write_checks_csv(os, report.checks);
  }
  std::vector<std::pair<std::string, std::string>> kv{{"checks", std::to_string(report.checks.size())},
                                                      {"failures", std::to_string(report.failures())}};
  for (const auto& [J, c] : report.c_hat_max_by_J) kv.emplace_back("c_hat_max_J" + std::to_string(J), format_double(c));
  if (o.all) kv.emplace_back("c_hat_spread", format_double(report.c_hat_spread));
  write_kv_file(o.c, "verify_summary.txt", kv);

  std::cout << report.checks.size() - report.failures() << '/' << report.checks.size() << " checks passed\n";
  for (const auto& ch : report.checks)
    if (!ch.pass) std::cout << "FAIL " << ch.name << ": lhs " << ch.lhs << " rhs " << ch.rhs << "  " << ch.detail << '\n';
  if (report.failures() > 0)
    throw NumericError(std::to_string(report.failures()) + " of " + std::to_string(report.checks.size()) +
                       " checks failed");
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric scattering and attention embeddings of protein trajectories", "pscape"};
  app.set_version_flag("--version", PSCAPE_VERSION);
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Write a synthetic trajectory");
  add_common(g, gen.c);
  auto* hinge_flag = g->add_flag("--hinge", gen.hinge, "Two-arm hinge with a sinusoidal angle (default)");
  g->add_flag("--two-state", gen.two_state, "Markov switching between an open and a closed angle")->excludes(hinge_flag);
  g->add_option("--frames", gen.frames)->capture_default_str();
  g->add_option("--n-per-arm", gen.n_per_arm, "Beads per arm (hinge)")->capture_default_str();
  g->add_option("--n", gen.n, "Residues (two-state)")->capture_default_str();
  g->add_option("--theta-min", gen.theta_min)->capture_default_str();
  g->add_option("--theta-max", gen.theta_max)->capture_default_str();
  g->add_option("--theta-open", gen.theta_open)->capture_default_str();
  g->add_option("--theta-closed", gen.theta_closed)->capture_default_str();
  g->add_option("--noise", gen.noise, "Per-bead Gaussian jitter")->capture_default_str();
  g->add_option("--switch-prob", gen.switch_prob)->capture_default_str();
  g->add_option("--bond-length", gen.bond_length)->capture_default_str();
  g->add_option("--mutate", gen.mutate, "Substitute one residue code, POSITION:CODE");
  g->add_option("--name", gen.name, "Output file name")->capture_default_str();

  IngestOptions ingest;
  auto* in = app.add_subcommand("ingest", "Validate a trajectory file and summarize it");
  add_common(in, ingest.c);
  in->add_option("-i,--input", ingest.input)->required()->check(CLI::ExistingFile);

  ScatterOptions sc;
  auto* s = app.add_subcommand("scatter", "Scattering coefficients of selected frames");
  add_common(s, sc.c);
  s->add_option("-i,--input", sc.input)->required()->check(CLI::ExistingFile);
  auto* frame_opt = s->add_option("--frame", sc.frames, "Frame positions (0-based)")->delimiter(',')->capture_default_str();
  s->add_flag("--all-frames", sc.all)->excludes(frame_opt);
  s->add_option("--k", sc.k)->capture_default_str();
  s->add_option("--J", sc.J)->capture_default_str();
  s->add_option("--scales", sc.scales, "Explicit increasing scales t_1..t_(J+1)")->delimiter(',');

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train on a trajectory with withheld windows");
  add_common(t, tr.c);
  t->add_option("-i,--input", tr.input)->required()->check(CLI::ExistingFile);
  add_model_options(t, tr.model);
  t->add_option("--node-embedding", tr.node_mode, "auto switches on above 200 residues")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
  t->add_option("--epochs", tr.train.epochs)->capture_default_str();
  t->add_option("--lr", tr.train.lr)->capture_default_str();
  t->add_option("--windows", tr.windows, "Withheld windows")->capture_default_str();
  t->add_option("--window-len", tr.window_len, "Frames per withheld window")->capture_default_str();
  t->add_flag("-q,--quiet", tr.quiet, "No progress on stderr");

  EmbedOptions em;
  auto* e = app.add_subcommand("embed", "Latent codes and predicted times for every frame");
  add_common(e, em.c);
  e->add_option("-i,--input", em.input)->required()->check(CLI::ExistingFile);
  e->add_option("--checkpoint", em.checkpoint)->required()->check(CLI::ExistingFile);

  DecodeOptions de;
  auto* d = app.add_subcommand("decode", "Structure targets decoded from latent codes");
  add_common(d, de.c);
  d->add_option("--checkpoint", de.checkpoint)->required()->check(CLI::ExistingFile);
  d->add_option("--latents", de.latents)->required()->check(CLI::ExistingFile);

  InterpolateOptions ip;
  auto* p = app.add_subcommand("interpolate", "Decode a straight line between two latent points");
  add_common(p, ip.c);
  p->add_option("--checkpoint", ip.checkpoint)->required()->check(CLI::ExistingFile);
  p->add_option("--latents", ip.latents)->required()->check(CLI::ExistingFile);
  p->add_option("--steps", ip.steps)->check(CLI::Range(2, 100000))->capture_default_str();
  p->add_option("--from", ip.from, "Start frame (otherwise k-means centroids)");
  p->add_option("--to", ip.to, "End frame");
  p->add_option("--clusters", ip.clusters, "k for the centroid mode")->check(CLI::Range(1, 64))->capture_default_str();

  MetricsOptions me;
  auto* m = app.add_subcommand("metrics", "Withheld-window metrics, attention readout, optional PCA");
  add_common(m, me.c);
  m->add_option("-i,--input", me.input)->required()->check(CLI::ExistingFile);
  m->add_option("--checkpoint", me.checkpoint)->required()->check(CLI::ExistingFile);
  m->add_option("--split", me.split, "split.csv written by train")->check(CLI::ExistingFile);
  m->add_option("--windows", me.windows)->capture_default_str();
  m->add_option("--window-len", me.window_len)->capture_default_str();
  m->add_option("--knn", me.knn, "k of the latent graph for the Dirichlet energy")->capture_default_str();
  m->add_flag("--pca", me.pca, "Also write a 2-D PCA of the latents");

  VerifyOptions ve;
  auto* v = app.add_subcommand("verify", "Numerical checks of the wavelet and scattering stability bounds");
  add_common(v, ve.c, 1);
  v->add_flag("--all", ve.all, "Include the C-hat sweep over J = 2..5");
  v->add_option("--n", ve.campaign.n)->capture_default_str();
  v->add_option("--k", ve.campaign.k)->capture_default_str();
  v->add_option("--trials", ve.campaign.trials)->capture_default_str();
  v->add_option("--J", ve.campaign.J)->capture_default_str();
  v->add_option("--flips", ve.campaign.flips)->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, std::move(args));
    std::reverse(args.begin(), args.end()); // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const pscape::Error& err) {
    std::cerr << "error: usage: config file: " << one_line(err.what()) << '\n';
    return 2;
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(err);
    std::cerr << "error: usage: " << one_line(err.what()) << '\n';
    return 2;
  }

  const std::vector<std::pair<CLI::App*, std::function<int()>>> handlers{
      {g, [&] { return run_gen(gen); }},          {in, [&] { return run_ingest(ingest); }},
      {s, [&] { return run_scatter(sc); }},       {t, [&] { return run_train(tr); }},
      {e, [&] { return run_embed(em); }},         {d, [&] { return run_decode(de); }},
      {p, [&] { return run_interpolate(ip); }},   {m, [&] { return run_metrics(me); }},
      {v, [&] { return run_verify(ve); }},
  };
  try {
    for (const auto& [sub, run] : handlers)
      if (sub->parsed()) return run();
  } catch (const ArgumentError& err) {
    std::cerr << "error: usage: " << one_line(err.what()) << '\n';
    return 2;
  } catch (const pscape::Error& err) {
    std::cerr << "error: " << err.kind() << ": " << one_line(err.what()) << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: internal: " << one_line(err.what()) << '\n';
    return 1;
  }
  return 2;
}
