#include "pscape/structure.hpp"

#include <cmath>
#include <numbers>

#include "pscape/error.hpp"

namespace pscape {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

double dihedral(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b, const Eigen::RowVector3d& c,
                const Eigen::RowVector3d& d, bool* degenerate) {
  const Eigen::Vector3d b1 = (b - a).transpose();
  const Eigen::Vector3d b2 = (c - b).transpose();
  const Eigen::Vector3d b3 = (d - c).transpose();
  const Eigen::Vector3d n1 = b1.cross(b2);
  const Eigen::Vector3d n2 = b2.cross(b3);
  const bool flat = n1.norm() <= 1e-12 * b1.norm() * b2.norm() || n2.norm() <= 1e-12 * b2.norm() * b3.norm() ||
                    b2.norm() == 0.0;
  if (degenerate) *degenerate = flat;
  if (flat) return 0.0;
  return wrap_angle(std::atan2(b2.norm() * b1.dot(n2), n1.dot(n2)));
}

Matrix pairwise_distances(const Matrix& coords) {
  const auto n = coords.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (coords.row(i) - coords.row(j)).norm();
  return d;
}

StructureTargets structure_targets(const TrajectoryFrame& frame) {
  const auto n = static_cast<Eigen::Index>(frame.size());
  if (n < 4) throw ArgumentError("structure_targets: need at least 4 residues");
  StructureTargets st;
  st.pairdist = pairwise_distances(frame.coords);
  const auto m = n - 3;
  st.dihedrals.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    bool degenerate = false;
    st.dihedrals(i) = dihedral(frame.coords.row(i), frame.coords.row(i + 1), frame.coords.row(i + 2),
                               frame.coords.row(i + 3), &degenerate);
    if (degenerate) ++st.collinear;
  }
  st.dihedral_diff.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      st.dihedral_diff(a, b) = a == b ? 0.0 : wrap_angle(st.dihedrals(a) - st.dihedrals(b));
  return st;
}

Eigen::RowVectorXd upper_triangle(const Matrix& m) {
  const auto n = m.rows();
  Eigen::RowVectorXd out(n * (n - 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) out(k++) = m(i, j);
  return out;
}

Matrix symmetric_from_upper(const Eigen::Ref<const Eigen::RowVectorXd>& upper, Eigen::Index n) {
  if (upper.size() != n * (n - 1) / 2) throw ShapeError("symmetric_from_upper: length mismatch");
  Matrix m = Matrix::Zero(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = upper(k++);
  return m;
}

Matrix antisymmetric_from_upper(const Eigen::Ref<const Eigen::RowVectorXd>& upper, Eigen::Index n) {
  if (upper.size() != n * (n - 1) / 2) throw ShapeError("antisymmetric_from_upper: length mismatch");
  Matrix m = Matrix::Zero(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      m(i, j) = upper(k);
      m(j, i) = -upper(k);
      ++k;
    }
  return m;
}

Matrix positional_encoding(Eigen::Index n, Eigen::Index d) {
  if (n < 1 || d < 1) throw ArgumentError("positional_encoding: n and d must be >= 1");
  Matrix r(n, 2 * d);
  for (Eigen::Index m = 0; m < d; ++m) {
    const double denom = std::pow(10000.0, 2.0 * static_cast<double>(m + 1) / static_cast<double>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double arg = static_cast<double>(i) / denom;
      r(i, 2 * m) = std::sin(arg);
      r(i, 2 * m + 1) = std::cos(arg);
    }
  }
  return r;
}

} // namespace pscape
