#include "pscape/diffusion_ops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "pscape/error.hpp"

namespace pscape {

namespace {

void check_operands(const char* op, const Matrix& a, const Vector& degree) {
  if (a.rows() != a.cols() || a.rows() != degree.size())
    throw ShapeError(std::string(op) + ": adjacency/degree dimensions disagree");
  if ((degree.array() <= 0.0).any()) throw GraphError(std::string(op) + ": zero-degree vertex");
}

} // namespace

Matrix lazy_walk(const Matrix& adjacency, const Vector& degree) {
  check_operands("lazy_walk", adjacency, degree);
  const auto n = adjacency.rows();
  Matrix p = adjacency * degree.cwiseInverse().asDiagonal();
  p += Matrix::Identity(n, n);
  return 0.5 * p;
}

Matrix symmetric_diffusion(const Matrix& adjacency, const Vector& degree) {
  check_operands("symmetric_diffusion", adjacency, degree);
  const auto n = adjacency.rows();
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  Matrix t = inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
  t += Matrix::Identity(n, n);
  return 0.5 * t;
}

Matrix normalized_laplacian(const Matrix& adjacency, const Vector& degree) {
  check_operands("normalized_laplacian", adjacency, degree);
  const auto n = adjacency.rows();
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  return Matrix::Identity(n, n) - Matrix(inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal());
}

Vector symmetric_eigenvalues(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
  return es.eigenvalues().reverse();
}

SpectralGap spectral_gap(const Matrix& t) {
  if (t.rows() < 2) throw ArgumentError("spectral_gap: need at least 2 vertices");
  const Vector ev = symmetric_eigenvalues(t);
  return {ev(1), 1.0 - ev(1)};
}

DiffusionOperators make_diffusion(const ProteinGraph& g) {
  DiffusionOperators ops;
  ops.P = lazy_walk(g.adjacency, g.degree);
  ops.T = symmetric_diffusion(g.adjacency, g.degree);
  ops.L_N = normalized_laplacian(g.adjacency, g.degree);
  Eigen::SelfAdjointEigenSolver<Matrix> es(ops.T);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
  ops.eigvals = es.eigenvalues().reverse();
  Vector v = es.eigenvectors().col(ops.T.rows() - 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0.0) v = -v;
      break;
    }
  }
  ops.lead_eigvec = v.normalized();
  return ops;
}

double weighted_norm(const Vector& x, const Vector& degree) {
  if (x.size() != degree.size()) throw ShapeError("weighted_norm: dimension mismatch");
  return x.cwiseQuotient(degree.cwiseSqrt()).norm();
}

Matrix weight_conjugate(const Matrix& m, const Vector& degree) {
  if (m.cols() != degree.size() || m.rows() % degree.size() != 0)
    throw ShapeError("weight_conjugate: dimension mismatch");
  const Vector s = degree.cwiseSqrt();
  const auto blocks = m.rows() / degree.size();
  Matrix out = m * s.asDiagonal();
  for (Eigen::Index b = 0; b < blocks; ++b)
    out.middleRows(b * degree.size(), degree.size()) = s.cwiseInverse().asDiagonal() *
                                                       out.middleRows(b * degree.size(), degree.size());
  return out;
}

double opnorm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double weighted_opnorm(const Matrix& m, const Vector& degree) {
  if (m.rows() != m.cols()) throw ShapeError("weighted_opnorm: matrix must be square");
  return opnorm(weight_conjugate(m, degree));
}

std::vector<Matrix> matrix_power_cascade(const Matrix& p, int t_max) {
  if (t_max < 1) throw ArgumentError("matrix_power_cascade: t_max must be >= 1");
  if (p.rows() != p.cols()) throw ShapeError("matrix_power_cascade: matrix must be square");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(t_max) + 1);
  out.push_back(Matrix::Identity(p.rows(), p.cols()));
  for (int t = 1; t <= t_max; ++t) out.push_back(out.back() * p);
  return out;
}

} // namespace pscape
