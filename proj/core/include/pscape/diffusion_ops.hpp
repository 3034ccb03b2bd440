#pragma once

#include <vector>

#include "pscape/graph_builder.hpp"
#include "pscape/linalg.hpp"

namespace pscape {

/// Lazy random walk P = (I + A D^-1) / 2. Column-stochastic.
Matrix lazy_walk(const Matrix& adjacency, const Vector& degree);

/// Symmetric diffusion T = (I + D^-1/2 A D^-1/2) / 2 = D^-1/2 P D^1/2.
Matrix symmetric_diffusion(const Matrix& adjacency, const Vector& degree);

/// L_N = I - D^-1/2 A D^-1/2.
Matrix normalized_laplacian(const Matrix& adjacency, const Vector& degree);

/// Eigenvalues of a symmetric matrix in descending order.
Vector symmetric_eigenvalues(const Matrix& sym);

struct SpectralGap {
  double lambda2 = 0.0;
  double gap = 0.0;
};

/// Second-largest eigenvalue of T via a full symmetric eigendecomposition.
SpectralGap spectral_gap(const Matrix& t);

struct DiffusionOperators {
  Matrix P;
  Matrix T;
  Matrix L_N;
  Vector eigvals;    // of T, descending
  Vector lead_eigvec; // unit eigenvector of T for the top eigenvalue, first nonzero entry > 0
};

DiffusionOperators make_diffusion(const ProteinGraph& g);

double weighted_norm(const Vector& x, const Vector& degree);

/// Operator norm of M on the space normed by ||D^-1/2 x||_2, i.e. the largest
/// singular value of D^-1/2 M D^1/2.
double weighted_opnorm(const Matrix& m, const Vector& degree);

/// Conjugation D^-1/2 M D^1/2.
Matrix weight_conjugate(const Matrix& m, const Vector& degree);

/// Largest singular value (spectral norm).
double opnorm(const Matrix& m);

/// [P^0, P^1, ..., P^t_max] by repeated multiplication.
std::vector<Matrix> matrix_power_cascade(const Matrix& p, int t_max);

} // namespace pscape
