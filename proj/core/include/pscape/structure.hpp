#pragma once

#include <cstddef>
#include <vector>

#include "pscape/linalg.hpp"
#include "pscape/trajectory_io.hpp"

namespace pscape {

/// Ground-truth geometry of one frame.
struct StructureTargets {
  Matrix pairdist;      // n x n, symmetric, zero diagonal
  Matrix dihedral_diff; // (n-3) x (n-3), wrap(phi_a - phi_b)
  Vector dihedrals;     // phi_0..phi_{n-4}
  std::size_t collinear = 0; // quadruples whose torsion was undefined (phi set to 0)
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Torsion angle of four points in (-pi, pi]; 0 when either plane is degenerate.
double dihedral(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b, const Eigen::RowVector3d& c,
                const Eigen::RowVector3d& d, bool* degenerate = nullptr);

Matrix pairwise_distances(const Matrix& coords);

StructureTargets structure_targets(const TrajectoryFrame& frame);

/// Rebuilds the full matrices from strict-upper-triangle vectors (row-major
/// order i < j): distances are mirrored, dihedral differences negated.
Matrix symmetric_from_upper(const Eigen::Ref<const Eigen::RowVectorXd>& upper, Eigen::Index n);
Matrix antisymmetric_from_upper(const Eigen::Ref<const Eigen::RowVectorXd>& upper, Eigen::Index n);
Eigen::RowVectorXd upper_triangle(const Matrix& m);

/// n x 2d matrix. Column 2m holds sin(i / 10000^(2(m+1)/d)) and column 2m+1
/// the cosine of the same argument, for residue index i = 0..n-1.
Matrix positional_encoding(Eigen::Index n, Eigen::Index d);

} // namespace pscape
