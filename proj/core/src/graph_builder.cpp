#include "pscape/graph_builder.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <queue>

#include "pscape/error.hpp"

namespace pscape {

std::vector<std::vector<int>> knn_lists(const Matrix& points, int k) {
  const int n = static_cast<int>(points.rows());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist[j] = (points.row(i) - points.row(j)).squaredNorm();
    std::iota(order.begin(), order.end(), 0);
    const auto take = std::min(n, k + 1);
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](int a, int b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
    auto& nb = out[i];
    for (int j : order) {
      if (j == i) continue;
      nb.push_back(j);
      if (static_cast<int>(nb.size()) == k) break;
    }
  }
  return out;
}

bool is_connected(const Matrix& adjacency) {
  const auto n = adjacency.rows();
  if (n == 0) return false;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> q;
  q.push(0);
  seen[0] = 1;
  Eigen::Index count = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (Eigen::Index u = 0; u < n; ++u) {
      if (adjacency(v, u) != 0.0 && !seen[u]) {
        seen[u] = 1;
        ++count;
        q.push(u);
      }
    }
  }
  return count == n;
}

Matrix one_hot(std::string_view sequence) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(sequence.size()), kAlphabetSize);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const int c = amino_acid_index(sequence[i]);
    if (c < 0) throw ArgumentError(std::string("unknown amino acid '") + sequence[i] + "'");
    x(static_cast<Eigen::Index>(i), c) = 1.0;
  }
  return x;
}

namespace {

ProteinGraph finish_graph(Matrix adjacency, Matrix signal, std::int64_t t) {
  ProteinGraph g;
  g.frame_t = t;
  const auto n = adjacency.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (adjacency(i, j) != 0.0) g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  g.degree = adjacency.rowwise().sum();
  g.adjacency = std::move(adjacency);
  g.signal = std::move(signal);
  return g;
}

} // namespace

ProteinGraph build_knn_graph(const TrajectoryFrame& frame, int k) {
  const int n = static_cast<int>(frame.size());
  if (k < 1 || k >= n) throw ArgumentError("build_knn_graph: need 1 <= k < n");
  Matrix a = Matrix::Zero(n, n);
  const auto lists = knn_lists(frame.coords, k);
  for (int i = 0; i < n; ++i) {
    for (int j : lists[i]) {
      a(i, j) = 1.0;
      a(j, i) = 1.0;
    }
  }
  if (!is_connected(a))
    throw GraphError("k-NN graph of frame " + std::to_string(frame.t) + " is disconnected; raise k");
  return finish_graph(std::move(a), one_hot(frame.sequence), frame.t);
}

ProteinGraph graph_from_adjacency(const Matrix& adjacency, Matrix signal, std::int64_t frame_t) {
  const auto n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("graph_from_adjacency: adjacency must be square");
  if (signal.rows() != n) throw ShapeError("graph_from_adjacency: signal rows must equal vertex count");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw ArgumentError("graph_from_adjacency: nonzero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw ArgumentError("graph_from_adjacency: entries must be 0/1");
      if (v != adjacency(j, i)) throw ArgumentError("graph_from_adjacency: adjacency not symmetric");
    }
  }
  if (!is_connected(adjacency)) throw GraphError("graph_from_adjacency: graph is disconnected");
  return finish_graph(adjacency, std::move(signal), frame_t);
}

Matrix permutation_matrix(std::span<const int> perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(perm[i], i) = 1.0;
  return p;
}

ProteinGraph permute_graph(const ProteinGraph& g, std::span<const int> perm) {
  if (static_cast<int>(perm.size()) != g.size()) throw ShapeError("permute_graph: permutation size mismatch");
  const Matrix p = permutation_matrix(perm);
  return finish_graph(p * g.adjacency * p.transpose(), p * g.signal, g.frame_t);
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  return perm;
}

Matrix random_chain(int n, Rng& rng) {
  Matrix x = Matrix::Zero(n, 3);
  Eigen::RowVector3d dir(1.0, 0.0, 0.0);
  for (int i = 1; i < n; ++i) {
    Eigen::RowVector3d step(rng.normal(), rng.normal(), rng.normal());
    step = (0.6 * dir + 0.4 * step.normalized()).normalized();
    dir = step;
    x.row(i) = x.row(i - 1) + 3.8 * step;
  }
  return x;
}

ProteinGraph random_chain_graph(int n, int k, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TrajectoryFrame fr;
    fr.coords = random_chain(n, rng);
    fr.sequence = round_robin_sequence(static_cast<std::size_t>(n));
    try {
      return build_knn_graph(fr, k);
    } catch (const GraphError&) {
    }
  }
  throw GraphError("random_chain_graph: could not draw a connected graph");
}

void write_edge_list(std::ostream& os, const ProteinGraph& g) {
  for (const auto& [i, j] : g.edges) os << i << ',' << j << '\n';
}

} // namespace pscape
