#include "pscape/training.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "pscape/error.hpp"
#include "pscape/rng.hpp"
#include "pscape/scattering.hpp"
#include "pscape/text_io.hpp"

namespace pscape {

namespace {

SplitPlan finish_plan(int n_frames, std::vector<std::pair<int, int>> windows) {
  std::sort(windows.begin(), windows.end());
  SplitPlan plan;
  std::vector<char> held(static_cast<std::size_t>(n_frames), 0);
  for (const auto& [s, len] : windows)
    for (int f = s; f < s + len; ++f) held[static_cast<std::size_t>(f)] = 1;
  for (int f = 0; f < n_frames; ++f) (held[static_cast<std::size_t>(f)] ? plan.test_frames : plan.train_frames).push_back(f);
  plan.windows = std::move(windows);
  return plan;
}

} // namespace

SplitPlan make_split(int n_frames, int n_windows, int window_len, std::uint64_t seed) {
  if (n_frames < 2 || n_windows < 0 || window_len < 1) throw ArgumentError("make_split: invalid sizes");
  if (static_cast<long long>(n_windows) * window_len * 2 > n_frames)
    throw ArgumentError("make_split: n_windows * window_len must be <= n_frames / 2");
  Rng rng = Rng(seed).split("split");
  constexpr int kRestarts = 100;
  constexpr int kDraws = 1000;
  for (int restart = 0; restart < kRestarts; ++restart) {
    std::vector<std::pair<int, int>> windows;
    bool ok = true;
    for (int w = 0; w < n_windows && ok; ++w) {
      ok = false;
      for (int draw = 0; draw < kDraws; ++draw) {
        const int s = static_cast<int>(rng.uniform_int(0, n_frames - window_len));
        const bool overlaps = std::any_of(windows.begin(), windows.end(), [&](const auto& o) {
          return s < o.first + o.second && o.first < s + window_len;
        });
        if (!overlaps) {
          windows.emplace_back(s, window_len);
          ok = true;
          break;
        }
      }
    }
    if (ok) return finish_plan(n_frames, std::move(windows));
  }
  throw ArgumentError("make_split: could not pack the windows; use fewer or shorter windows");
}

SplitPlan prefix_split(int n_frames, int train_count, int window_len) {
  if (train_count < 1 || train_count >= n_frames || window_len < 1) throw ArgumentError("prefix_split: invalid sizes");
  std::vector<std::pair<int, int>> windows;
  for (int s = train_count; s < n_frames; s += window_len) windows.emplace_back(s, std::min(window_len, n_frames - s));
  return finish_plan(n_frames, std::move(windows));
}

Adam::Adam(const ModelParams& params, const TrainConfig& config) : config_(config) {
  for (const auto& [name, m] : params.tensors) {
    m_.push_back(Matrix::Zero(m.rows(), m.cols()));
    v_.push_back(Matrix::Zero(m.rows(), m.cols()));
  }
}

void Adam::step(ModelParams& params, std::span<const Matrix> grads) {
  if (grads.size() != params.tensors.size()) throw ShapeError("adam: gradient count does not match parameters");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Matrix& p = params.tensors[i].second;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseProduct(grads[i]);
    p.array() -= config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

TrainResult train(const Trajectory& traj, std::span<const int> train_frames, const ModelConfig& model,
                  const TrainConfig& config) {
  Rng rng = Rng(config.seed).split("init");
  ModelParams params = init_params(model, rng);
  params.norm = fit_normalization(traj, train_frames);
  return train_from(std::move(params), traj, train_frames, config);
}

TrainResult train_from(ModelParams params, const Trajectory& traj, std::span<const int> train_frames,
                       const TrainConfig& config) {
  if (config.epochs < 0) throw ArgumentError("train: epochs must be >= 0");
  if (!(config.lr >= 0.0)) throw ArgumentError("train: lr must be >= 0");
  validate_params(params);
  const PreparedBatch batch = prepare_frames(traj, train_frames, params.config);
  Adam adam(params, config);
  TrainResult result;
  std::vector<Matrix> grads(params.tensors.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape tape;
    ParamVars vars(tape, params, true);
    const ForwardResult out = forward(vars, params.config, batch);
    const LossNodes l = loss(out, params, batch);
    const LossTerms terms = l.values();
    const std::pair<const char*, double> named[] = {
        {"time", terms.time}, {"structure", terms.structure}, {"scattering", terms.scattering}, {"node", terms.node}};
    for (const auto& [name, value] : named)
      if (!std::isfinite(value))
        throw NumericError(std::string("loss term '") + name + "' diverged at epoch " + std::to_string(epoch + 1));
    tape.backward(l.total);
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = vars.all()[i].second.grad();
    adam.step(params, grads);
    result.curve.push_back(terms);
    if (config.on_epoch) config.on_epoch(epoch + 1, terms);
  }
  result.expected_scales = expected_scales(params.at("theta"));
  result.scales_increasing = scales_increasing(params.at("theta"));
  result.params = std::move(params);
  return result;
}

void write_split_csv(std::ostream& os, const SplitPlan& plan) {
  os << "start,length\n";
  for (const auto& [s, len] : plan.windows) os << s << ',' << len << '\n';
}

SplitPlan read_split_csv(std::istream& is, int n_frames) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::pair<int, int>> windows;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != "start,length") throw ParseError(lineno, "expected 'start,length' header");
      header = true;
      continue;
    }
    const auto comma = t.find(',');
    long long s = 0, len = 0;
    if (comma == std::string_view::npos || !parse_int(t.substr(0, comma), s) || !parse_int(t.substr(comma + 1), len))
      throw ParseError(lineno, "expected '<start>,<length>'");
    if (s < 0 || len < 1 || s + len > n_frames) throw ParseError(lineno, "window outside the trajectory");
    for (const auto& [os, ol] : windows)
      if (s < os + ol && os < s + len) throw ParseError(lineno, "windows overlap");
    windows.emplace_back(static_cast<int>(s), static_cast<int>(len));
  }
  if (!header) throw ParseError(lineno + 1, "empty split file");
  return finish_plan(n_frames, std::move(windows));
}

void write_curve_csv(std::ostream& os, std::span<const LossTerms> curve) {
  os << "epoch,total,time,structure,scattering,node\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    const auto& c = curve[e];
    os << e + 1 << ',' << format_double(c.total) << ',' << format_double(c.time) << ',' << format_double(c.structure)
       << ',' << format_double(c.scattering) << ',' << format_double(c.node) << '\n';
  }
}

} // namespace pscape
