#include "pscape/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <istream>
#include <ostream>

#include <Eigen/SVD>

#include "pscape/error.hpp"
#include "pscape/graph_builder.hpp"
#include "pscape/rng.hpp"
#include "pscape/text_io.hpp"

namespace pscape {

namespace {

std::vector<double> to_vector(const Eigen::RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

double mean_abs_wrapped(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  if (a.size() == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::abs(wrap_angle(a(i) - b(i)));
  return s / static_cast<double>(a.size());
}

Matrix centered(const Matrix& m) { return m.rowwise() - m.colwise().mean(); }

} // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / n);
  return r;
}

MetricsReport score_predictions(std::span<const DecodedStructure> predicted, std::span<const StructureTargets> truth,
                                std::span<const Matrix> truth_coords, const SplitPlan& split) {
  const std::size_t m = split.test_frames.size();
  if (predicted.size() != m || truth.size() != m)
    throw ShapeError("score_predictions: predictions and targets must match the withheld frames");
  std::vector<int> position(split.test_frames.empty() ? 0 : static_cast<std::size_t>(split.test_frames.back()) + 1, -1);
  for (std::size_t i = 0; i < m; ++i) {
    const int f = split.test_frames[i];
    if (static_cast<std::size_t>(f) >= position.size()) position.resize(static_cast<std::size_t>(f) + 1, -1);
    position[static_cast<std::size_t>(f)] = static_cast<int>(i);
  }

  std::vector<double> frame_pd(m), frame_dih(m);
  std::vector<double> pool_true, pool_pred;
  for (std::size_t i = 0; i < m; ++i) {
    const auto pd_pred = upper_triangle(predicted[i].pairdist);
    const auto pd_true = upper_triangle(truth[i].pairdist);
    if (pd_pred.size() != pd_true.size()) throw ShapeError("score_predictions: pairwise distance size mismatch");
    frame_pd[i] = pd_true.size() ? (pd_pred - pd_true).cwiseAbs().mean() : 0.0;
    frame_dih[i] = mean_abs_wrapped(upper_triangle(predicted[i].dihedral_diff), upper_triangle(truth[i].dihedral_diff));
    const auto t = to_vector(pd_true);
    const auto p = to_vector(pd_pred);
    pool_true.insert(pool_true.end(), t.begin(), t.end());
    pool_pred.insert(pool_pred.end(), p.begin(), p.end());
  }

  MetricsReport r;
  std::vector<double> win_pd, win_dih;
  for (const auto& [start, len] : split.windows) {
    WindowMetrics w{start, len, 0.0, 0.0};
    int count = 0;
    for (int f = start; f < start + len; ++f) {
      const int i = static_cast<std::size_t>(f) < position.size() ? position[static_cast<std::size_t>(f)] : -1;
      if (i < 0) throw ArgumentError("score_predictions: window frame is not a withheld frame");
      w.mae_pairdist += frame_pd[static_cast<std::size_t>(i)];
      w.mae_dihedral += frame_dih[static_cast<std::size_t>(i)];
      ++count;
    }
    if (count) {
      w.mae_pairdist /= count;
      w.mae_dihedral /= count;
    }
    win_pd.push_back(w.mae_pairdist);
    win_dih.push_back(w.mae_dihedral);
    r.windows.push_back(w);
  }
  r.mae_pairdist = mean_std(win_pd);
  r.mae_dihedral = mean_std(win_dih);
  r.scc = spearman(pool_true, pool_pred);
  r.pcc = pearson(pool_true, pool_pred);

  const bool have_coords = m > 0 && truth_coords.size() == m &&
                           std::all_of(predicted.begin(), predicted.end(), [](const auto& d) { return d.coords.has_value(); });
  if (have_coords) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += kabsch_rmsd(*predicted[i].coords, truth_coords[i]);
    r.rmsd = s / static_cast<double>(m);
  }
  return r;
}

MetricsReport evaluate(const ModelParams& params, const Trajectory& traj, const SplitPlan& split, int k) {
  std::vector<int> all(traj.frames.size());
  std::iota(all.begin(), all.end(), 0);
  return evaluate_embedding(params, traj, split, embed(params, traj, all), k);
}

MetricsReport evaluate_embedding(const ModelParams& params, const Trajectory& traj, const SplitPlan& split,
                                 const Embedding& emb, int k) {
  const auto n_frames = static_cast<Eigen::Index>(traj.frames.size());
  if (emb.z.rows() != n_frames) throw ShapeError("evaluate: embedding must cover every frame");
  std::vector<DecodedStructure> predicted;
  std::vector<StructureTargets> truth;
  std::vector<Matrix> coords;
  std::vector<double> t_true, t_pred;
  double sq = 0.0;
  for (int f : split.test_frames) {
    if (f < 0 || f >= n_frames) throw ArgumentError("evaluate: withheld frame out of range");
    predicted.push_back(decode_latent(params, emb.z.row(f)));
    truth.push_back(structure_targets(traj.frames[static_cast<std::size_t>(f)]));
    coords.push_back(centered(traj.frames[static_cast<std::size_t>(f)].coords));
    t_true.push_back(static_cast<double>(emb.t[static_cast<std::size_t>(f)]));
    t_pred.push_back(emb.t_hat(f));
    sq += (t_pred.back() - t_true.back()) * (t_pred.back() - t_true.back());
  }
  MetricsReport r = score_predictions(predicted, truth, coords, split);
  r.time_mse = t_true.empty() ? 0.0 : sq / static_cast<double>(t_true.size());
  r.time_spearman = spearman(t_true, t_pred);

  Eigen::VectorXd signal(n_frames);
  for (Eigen::Index f = 0; f < n_frames; ++f) signal(f) = static_cast<double>(emb.t[static_cast<std::size_t>(f)]);
  r.dirichlet = dirichlet_energy_knn(emb.z, signal, k);
  if (emb.features.rows() == n_frames) r.dirichlet_raw = dirichlet_energy_knn(emb.features, signal, k);

  Matrix entries(n_frames, static_cast<Eigen::Index>(params.config.n_pairs()));
  for (Eigen::Index f = 0; f < n_frames; ++f)
    entries.row(f) = upper_triangle(pairwise_distances(traj.frames[static_cast<std::size_t>(f)].coords));
  const Matrix dev = centered(entries);
  r.pairdist_entry_std =
      (dev.cwiseProduct(dev).colwise().sum() / static_cast<double>(n_frames)).cwiseSqrt().mean();
  return r;
}

double dirichlet_energy(const Matrix& adjacency, const Eigen::VectorXd& signal) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() != signal.size())
    throw ShapeError("dirichlet_energy: adjacency and signal sizes differ");
  const double denom = signal.squaredNorm();
  if (denom == 0.0) return 0.0;
  const Eigen::VectorXd degree = adjacency.rowwise().sum();
  const double num = signal.dot(degree.cwiseProduct(signal) - adjacency * signal);
  return num / denom;
}

double dirichlet_energy_knn(const Matrix& points, const Eigen::VectorXd& signal, int k) {
  if (points.rows() != signal.size()) throw ShapeError("dirichlet_energy: points and signal sizes differ");
  if (k < 1) throw ArgumentError("dirichlet_energy: k must be >= 1");
  if (points.rows() < 2) throw ArgumentError("dirichlet_energy: need at least two points");
  const Matrix dev = centered(points);
  if (dev.squaredNorm() / static_cast<double>(points.rows()) < 1e-12) throw NumericError("latents collapsed");
  const auto lists = knn_lists(points, k);
  Matrix a = Matrix::Zero(points.rows(), points.rows());
  for (std::size_t i = 0; i < lists.size(); ++i)
    for (int j : lists[i]) {
      a(static_cast<Eigen::Index>(i), j) = 1.0;
      a(j, static_cast<Eigen::Index>(i)) = 1.0;
    }
  return dirichlet_energy(a, signal);
}

Eigen::VectorXd ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) r(static_cast<Eigen::Index>(order[q])) = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
  if (a.size() < 2) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd dx = x.array() - x.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double den = std::sqrt(dx.squaredNorm() * dy.squaredNorm());
  return den > 0.0 ? dx.dot(dy) / den : 0.0;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
  const Eigen::VectorXd ra = ranks(a);
  const Eigen::VectorXd rb = ranks(b);
  return pearson({ra.data(), static_cast<std::size_t>(ra.size())}, {rb.data(), static_cast<std::size_t>(rb.size())});
}

double kabsch_rmsd(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != 3 || b.cols() != 3) throw ShapeError("kabsch_rmsd: expected two n x 3 sets");
  if (a.rows() == 0) return 0.0;
  const Matrix ca = centered(a);
  const Matrix cb = centered(b);
  const Eigen::Matrix3d h = ca.transpose() * cb;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double d = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  fix(2, 2) = d;
  // rotation taking centered a onto centered b: rows map as a_i R^T
  const Eigen::Matrix3d r = svd.matrixV() * fix * svd.matrixU().transpose();
  const Matrix diff = ca * r.transpose() - cb;
  return std::sqrt(diff.squaredNorm() / static_cast<double>(a.rows()));
}

Clustering kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter) {
  const auto m = points.rows();
  if (k < 1 || k > m) throw ArgumentError("kmeans: need 1 <= k <= number of points");
  Rng rng = Rng(seed).split("kmeans");
  Clustering c;
  c.centroids.resize(k, points.cols());

  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  c.centroids.row(0) = points.row(rng.uniform_int(0, m - 1));
  for (int q = 1; q < k; ++q) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - c.centroids.row(q - 1)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = m - 1;
    if (total > 0.0) {
      double u = rng.uniform(0.0, total);
      for (Eigen::Index i = 0; i < m; ++i) {
        u -= d2[static_cast<std::size_t>(i)];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(0, m - 1);
    }
    c.centroids.row(q) = points.row(pick);
  }

  c.assignment.assign(static_cast<std::size_t>(m), -1);
  int reseeds = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int q = 0; q < k; ++q) {
        const double d = (points.row(i) - c.centroids.row(q)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = q;
        }
      }
      if (c.assignment[static_cast<std::size_t>(i)] != best) {
        c.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(c.assignment[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(c.assignment[static_cast<std::size_t>(i)])];
    }
    bool reseeded = false;
    for (int q = 0; q < k; ++q) {
      if (counts[static_cast<std::size_t>(q)] > 0) {
        c.centroids.row(q) = sums.row(q) / counts[static_cast<std::size_t>(q)];
        continue;
      }
      if (++reseeds > 10 * k) throw NumericError("kmeans: cluster stayed empty after re-seeding");
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = (points.row(i) - c.centroids.row(c.assignment[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      c.centroids.row(q) = points.row(far);
      reseeded = true;
    }
    if (!changed && !reseeded) break;
  }
  c.inertia = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    c.inertia += (points.row(i) - c.centroids.row(c.assignment[static_cast<std::size_t>(i)])).squaredNorm();
  return c;
}

double label_agreement(std::span<const int> assignment, std::span<const int> labels, int k) {
  if (assignment.size() != labels.size()) throw ShapeError("label_agreement: length mismatch");
  if (k < 1 || k > 8) throw ArgumentError("label_agreement: k must be in [1, 8]");
  if (assignment.empty()) return 1.0;
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      const int a = assignment[i];
      if (a < 0 || a >= k) throw ArgumentError("label_agreement: assignment out of range");
      if (perm[static_cast<std::size_t>(a)] == labels[i]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(assignment.size());
}

std::vector<DecodedStructure> interpolate_latents(const ModelParams& params, const Eigen::RowVectorXd& z_a,
                                                  const Eigen::RowVectorXd& z_b, int steps) {
  if (steps < 2) throw ArgumentError("interpolate_latents: steps must be >= 2");
  if (z_a.size() != z_b.size()) throw ShapeError("interpolate_latents: endpoint dimensions differ");
  std::vector<DecodedStructure> out;
  for (int s = 0; s < steps; ++s) {
    if (s == 0) {
      out.push_back(decode_latent(params, z_a));
    } else if (s == steps - 1) {
      out.push_back(decode_latent(params, z_b));
    } else {
      const double w = static_cast<double>(s) / static_cast<double>(steps - 1);
      out.push_back(decode_latent(params, ((1.0 - w) * z_a + w * z_b).eval()));
    }
  }
  return out;
}

Eigen::VectorXd positional_variance(const Trajectory& traj) {
  const auto n = static_cast<Eigen::Index>(traj.residues());
  const double frames = static_cast<double>(traj.frames.size());
  if (traj.frames.empty()) throw ArgumentError("positional_variance: empty trajectory");
  Matrix mean = Matrix::Zero(n, 3);
  for (const auto& f : traj.frames) mean += centered(f.coords);
  mean /= frames;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
  for (const auto& f : traj.frames) var += (centered(f.coords) - mean).rowwise().squaredNorm();
  return var / frames;
}

AttentionReadout attention_readout(const ModelParams& params, const Trajectory& traj) {
  std::vector<int> all(traj.frames.size());
  std::iota(all.begin(), all.end(), 0);
  return attention_readout(embed(params, traj, all), traj);
}

AttentionReadout attention_readout(const Embedding& e, const Trajectory& traj) {
  if (e.residue_scores.rows() != static_cast<Eigen::Index>(traj.frames.size()))
    throw ShapeError("attention_readout: embedding must cover every frame");
  AttentionReadout r;
  r.scores = e.residue_scores.colwise().mean().transpose();
  r.flexibility = positional_variance(traj);
  r.spearman = spearman({r.scores.data(), static_cast<std::size_t>(r.scores.size())},
                        {r.flexibility.data(), static_cast<std::size_t>(r.flexibility.size())});
  return r;
}

double latent_overlap_ratio(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("latent_overlap_ratio: dimension mismatch");
  if (a.rows() < 2 || b.rows() < 1) throw ArgumentError("latent_overlap_ratio: not enough points");
  double within = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) within += (a.row(i) - a.row(j)).norm();
  within /= 0.5 * static_cast<double>(a.rows()) * static_cast<double>(a.rows() - 1);
  double cross = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) cross += (a.row(i) - b.row(j)).norm();
  cross /= static_cast<double>(a.rows()) * static_cast<double>(b.rows());
  if (!(within > 0.0)) throw NumericError("latents collapsed");
  return cross / within;
}

GeneralizationReport short_to_long(const Trajectory& traj, int train_count, const ModelConfig& model,
                                   const TrainConfig& config, int k) {
  const int n_frames = static_cast<int>(traj.frames.size());
  const SplitPlan split = prefix_split(n_frames, train_count, n_frames - train_count);
  const TrainResult trained = train(traj, split.train_frames, model, config);
  GeneralizationReport r;
  r.metrics = evaluate(trained.params, traj, split, k);
  return r;
}

GeneralizationReport wild_to_mutant(const Trajectory& wild, const Trajectory& mutant, const SplitPlan& split,
                                    const ModelConfig& model, const TrainConfig& config, int k) {
  if (wild.residues() != mutant.residues()) throw ArgumentError("wild_to_mutant: sequence length mismatch");
  const TrainResult trained = train(wild, split.train_frames, model, config);
  std::vector<int> wild_all(wild.frames.size()), mutant_all(mutant.frames.size());
  std::iota(wild_all.begin(), wild_all.end(), 0);
  std::iota(mutant_all.begin(), mutant_all.end(), 0);
  const Embedding ew = embed(trained.params, wild, wild_all);
  const Embedding em = embed(trained.params, mutant, mutant_all);
  GeneralizationReport r;
  r.metrics = evaluate_embedding(trained.params, mutant, split, em, k);
  r.overlap_ratio = latent_overlap_ratio(ew.z, em.z);
  return r;
}

Matrix pca_2d(const Matrix& points, std::uint64_t seed) {
  const Matrix x = centered(points);
  const auto d = x.cols();
  const Matrix cov = x.transpose() * x / std::max<double>(1.0, static_cast<double>(x.rows()));
  Rng rng = Rng(seed).split("pca");
  Matrix basis = Matrix::Zero(d, 2);
  Matrix deflated = cov;
  for (int comp = 0; comp < std::min<Eigen::Index>(2, d); ++comp) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    v.normalize();
    for (int it = 0; it < 1000; ++it) {
      Eigen::VectorXd w = deflated * v;
      const double norm = w.norm();
      if (norm == 0.0) break;
      w /= norm;
      const bool done = (w - v).norm() < 1e-12;
      v = w;
      if (done) break;
    }
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(comp) = v;
    const double lambda = v.dot(cov * v);
    deflated -= lambda * v * v.transpose();
  }
  return x * basis;
}

std::vector<std::pair<std::string, std::string>> metrics_pairs(const MetricsReport& r) {
  std::vector<std::pair<std::string, std::string>> kv{
      {"mae_pairdist_mean", format_double(r.mae_pairdist.mean)},
      {"mae_pairdist_std", format_double(r.mae_pairdist.std)},
      {"mae_dihedral_mean", format_double(r.mae_dihedral.mean)},
      {"mae_dihedral_std", format_double(r.mae_dihedral.std)},
      {"scc", format_double(r.scc)},
      {"pcc", format_double(r.pcc)},
  };
  if (r.rmsd) kv.emplace_back("rmsd", format_double(*r.rmsd));
  kv.emplace_back("dirichlet", format_double(r.dirichlet));
  kv.emplace_back("dirichlet_raw", format_double(r.dirichlet_raw));
  kv.emplace_back("time_mse", format_double(r.time_mse));
  kv.emplace_back("time_spearman", format_double(r.time_spearman));
  kv.emplace_back("pairdist_entry_std", format_double(r.pairdist_entry_std));
  kv.emplace_back("windows", std::to_string(r.windows.size()));
  return kv;
}

void write_window_csv(std::ostream& os, const MetricsReport& r) {
  os << "start,length,mae_pairdist,mae_dihedral\n";
  for (const auto& w : r.windows)
    os << w.start << ',' << w.length << ',' << format_double(w.mae_pairdist) << ',' << format_double(w.mae_dihedral)
       << '\n';
}

void write_latents_csv(std::ostream& os, const Embedding& e, std::span<const int> frames) {
  if (static_cast<Eigen::Index>(frames.size()) != e.z.rows()) throw ShapeError("write_latents_csv: frame count mismatch");
  os << "frame,t";
  for (Eigen::Index j = 0; j < e.z.cols(); ++j) os << ",z_" << j;
  os << '\n';
  for (Eigen::Index i = 0; i < e.z.rows(); ++i) {
    os << frames[static_cast<std::size_t>(i)] << ',' << e.t[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < e.z.cols(); ++j) os << ',' << format_double(e.z(i, j));
    os << '\n';
  }
}

LatentTable read_latents_csv(std::istream& is) {
  LatentTable table;
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index dim = -1;
  std::vector<double> values;
  auto cells = [](std::string_view row) {
    std::vector<std::string_view> out;
    for (std::size_t pos = 0;;) {
      const auto comma = row.find(',', pos);
      out.push_back(trim(row.substr(pos, comma == std::string_view::npos ? row.npos : comma - pos)));
      if (comma == std::string_view::npos) return out;
      pos = comma + 1;
    }
  };
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto c = cells(t);
    if (dim < 0) {
      if (c.size() < 3 || c[0] != "frame" || c[1] != "t") throw ParseError(lineno, "expected 'frame,t,z_0,...' header");
      dim = static_cast<Eigen::Index>(c.size()) - 2;
      continue;
    }
    if (static_cast<Eigen::Index>(c.size()) != dim + 2) throw ParseError(lineno, "wrong number of columns");
    long long frame = 0, time = 0;
    if (!parse_int(c[0], frame) || !parse_int(c[1], time)) throw ParseError(lineno, "bad frame or time");
    table.frames.push_back(static_cast<int>(frame));
    table.t.push_back(time);
    for (Eigen::Index j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!parse_double(c[static_cast<std::size_t>(j) + 2], v)) throw ParseError(lineno, "bad latent value");
      values.push_back(v);
    }
  }
  if (dim < 0) throw ParseError(lineno + 1, "empty latent file");
  table.z = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(table.frames.size()), dim);
  return table;
}

} // namespace pscape
