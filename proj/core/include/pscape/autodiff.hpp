#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "pscape/linalg.hpp"

/// Reverse-mode differentiation over dense row-major f64 matrices.
///
/// Values are computed eagerly when an op is called; the op also records a
/// closure that pushes its output adjoint back to its parents. `backward` walks
/// the tape in reverse creation order, which is a valid reverse topological
/// order because a node can only reference nodes created before it.
namespace pscape::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
public:
  Var() = default;

  const Matrix& value() const;
  /// Accumulated adjoint; a zero matrix of the value's shape if nothing reached it.
  const Matrix& grad() const;
  double scalar() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
public:
  using Backprop = std::function<void(Tape&, const Matrix& out_value, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value);
  /// Non-differentiable input; gradients never flow into or through it.
  Var constant(Matrix value);

  /// Seeds d(root)/d(root) = 1 and propagates. Root must be 1x1.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by op implementations.
  Var record(const char* op, Matrix value, std::initializer_list<Var> parents, Backprop backprop);
  Var record(const char* op, Matrix value, std::span<const Var> parents, Backprop backprop);
  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }
  void accumulate(const Var& v, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Var& v, const Expr& g);
  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad_of(std::size_t id);
  const char* op_of(std::size_t id) const { return nodes_[id].op; }

private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    const char* op = "";
    Backprop backprop;
  };

  Matrix& grad_slot(std::size_t id);

  std::deque<Node> nodes_;
};

template <typename Expr>
void Tape::accumulate_expr(const Var& v, const Expr& g) {
  if (!nodes_[v.id()].needs_grad) return;
  grad_slot(v.id()) += g;
}

// Elementwise and structural ops. Every op throws ShapeError naming itself
// when operand shapes disagree.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var abs(Var a);  // subgradient 0 at 0
Var relu(Var a); // subgradient 0 at 0
Var softmax_cols(Var a);
Var softmax_rows(Var a);
Var hconcat(std::span<const Var> parts);
Var vconcat(std::span<const Var> parts);
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols); // row-major order
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::span<const int> index);
Var gather_cols(Var a, std::span<const int> index);
/// a (m x n) + b (1 x n) broadcast over rows.
Var add_row(Var a, Var b);
/// Stacks `times` copies of a vertically.
Var tile_rows(Var a, Eigen::Index times);

// Reductions to 1x1.
Var sum(Var a);
Var mean(Var a);
Var mse(Var a, Var b);

// Block-diagonal batched variants: the row range of each operand is split
// into `blocks` equal consecutive blocks and the op is applied per block.
/// C_f = A_f B_f.
Var block_matmul(Var a, Var b, Eigen::Index blocks);
/// C_f = A_f B_f^T.
Var block_matmul_nt(Var a, Var b, Eigen::Index blocks);
/// Column-wise softmax inside each block.
Var block_softmax_cols(Var a, Eigen::Index blocks);
/// C_f = A_f^T.
Var block_transpose(Var a, Eigen::Index blocks);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// Plain (non-recording) helpers shared with tests.
Matrix softmax_cols_value(const Matrix& a);
Matrix softmax_rows_value(const Matrix& a);

} // namespace pscape::ad
