#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pscape/linalg.hpp"
#include "pscape/rng.hpp"
#include "pscape/trajectory_io.hpp"

namespace pscape {

/// Undirected residue graph of one frame plus its one-hot signal matrix.
struct ProteinGraph {
  std::int64_t frame_t = 0;
  std::vector<std::pair<int, int>> edges; // i < j, lexicographically sorted
  Matrix adjacency;                       // n x n, symmetric 0/1, zero diagonal
  Vector degree;                          // row sums of adjacency, all >= 1
  Matrix signal;                          // n x C, one-hot rows for amino acids

  int size() const noexcept { return static_cast<int>(adjacency.rows()); }
  Matrix degree_matrix() const { return degree.asDiagonal(); }
};

/// Symmetrized-union k-NN graph on the residue centers. Distance ties go to
/// the lower vertex index. Throws GraphError when the result is disconnected.
ProteinGraph build_knn_graph(const TrajectoryFrame& frame, int k);

/// Neighbour lists (sorted by distance, ties by index) for every point.
std::vector<std::vector<int>> knn_lists(const Matrix& points, int k);

/// Graph from an explicit adjacency matrix; validates symmetry, 0/1 entries,
/// empty diagonal and connectivity.
ProteinGraph graph_from_adjacency(const Matrix& adjacency, Matrix signal, std::int64_t frame_t = 0);

Matrix one_hot(std::string_view sequence);

bool is_connected(const Matrix& adjacency);

/// Relabels vertex i as perm[i]: A' = P A P^T and X' = P X with P(perm[i], i) = 1.
ProteinGraph permute_graph(const ProteinGraph& g, std::span<const int> perm);
Matrix permutation_matrix(std::span<const int> perm);
std::vector<int> random_permutation(int n, Rng& rng);

/// Residue centers of a random self-avoiding-ish chain with 3.8 spacing; a
/// cheap stand-in for a protein conformation when testing graph code.
Matrix random_chain(int n, Rng& rng);

/// k-NN graph on a random chain, redrawn until connected.
ProteinGraph random_chain_graph(int n, int k, Rng& rng);

/// `i,j` per line with i < j.
void write_edge_list(std::ostream& os, const ProteinGraph& g);

} // namespace pscape
