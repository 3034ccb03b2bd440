#include "pscape/autodiff.hpp"

#include <cmath>
#include <string>

#include "pscape/error.hpp"

namespace pscape::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_tape(const char* op, const Var& a, const Var& b) {
  if (!a.valid() || a.tape() != b.tape()) shape_error(op, "operands live on different tapes");
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  require_same_tape(op, a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_error(op, "shape mismatch " + dims(a.value()) + " vs " + dims(b.value()));
}

} // namespace

const Matrix& Var::value() const { return tape_->value_of(id_); }
const Matrix& Var::grad() const { return tape_->grad_of(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar: value is " + dims(v));
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  n.op = "leaf";
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = false;
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Matrix value, std::initializer_list<Var> parents, Backprop backprop) {
  return record(op, std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backprop));
}

Var Tape::record(const char* op, Matrix value, std::span<const Var> parents, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const Var& p : parents) n.needs_grad = n.needs_grad || nodes_[p.id()].needs_grad;
  if (n.needs_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  if (!nodes_[v.id()].needs_grad) return;
  grad_slot(v.id()) += g;
}

const Matrix& Tape::grad_of(std::size_t id) { return grad_slot(id); }

void Tape::backward(Var root) {
  if (root.tape() != this) throw ShapeError("backward: root belongs to another tape");
  const Matrix& rv = nodes_[root.id()].value;
  if (rv.rows() != 1 || rv.cols() != 1) throw ShapeError("backward: root must be scalar, got " + dims(rv));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  grad_slot(root.id())(0, 0) = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backprop) continue;
    n.backprop(*this, n.value, n.grad);
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  if (a.cols() != b.rows()) shape_error("matmul", dims(a.value()) + " * " + dims(b.value()));
  Matrix v = a.value() * b.value();
  return a.tape()->record("matmul", std::move(v), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate_expr(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate_expr(b, a.value().transpose() * g);
  });
}

Var transpose(Var a) {
  Matrix v = a.value().transpose();
  return a.tape()->record("transpose", std::move(v), {a},
                          [a](Tape& t, const Matrix&, const Matrix& g) { t.accumulate_expr(a, g.transpose()); });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Matrix v = a.value() + b.value();
  return a.tape()->record("add", std::move(v), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Matrix v = a.value() - b.value();
  return a.tape()->record("sub", std::move(v), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate_expr(b, -g);
  });
}

Var scale(Var a, double s) {
  Matrix v = s * a.value();
  return a.tape()->record("scale", std::move(v), {a},
                          [a, s](Tape& t, const Matrix&, const Matrix& g) { t.accumulate_expr(a, s * g); });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a, b);
  Matrix v = a.value().cwiseProduct(b.value());
  return a.tape()->record("hadamard", std::move(v), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate_expr(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate_expr(b, g.cwiseProduct(a.value()));
  });
}

Var abs(Var a) {
  Matrix v = a.value().cwiseAbs();
  return a.tape()->record("abs", std::move(v), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
    const auto& x = a.value().array();
    t.accumulate_expr(a, (g.array() * ((x > 0.0).cast<double>() - (x < 0.0).cast<double>())).matrix());
  });
}

Var relu(Var a) {
  Matrix v = a.value().cwiseMax(0.0);
  return a.tape()->record("relu", std::move(v), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate_expr(a, (g.array() * (a.value().array() > 0.0).cast<double>()).matrix());
  });
}

Matrix softmax_cols_value(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double m = a.col(j).maxCoeff();
    out.col(j) = (a.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Matrix softmax_rows_value(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    out.row(i) = (a.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Var softmax_cols(Var a) {
  return a.tape()->record("softmax_cols", softmax_cols_value(a.value()), {a},
                          [a](Tape& t, const Matrix& y, const Matrix& g) {
                            const Eigen::RowVectorXd dots = y.cwiseProduct(g).colwise().sum();
                            t.accumulate_expr(a, y.cwiseProduct(g - Matrix(dots.replicate(y.rows(), 1))));
                          });
}

Var softmax_rows(Var a) {
  return a.tape()->record("softmax_rows", softmax_rows_value(a.value()), {a},
                          [a](Tape& t, const Matrix& y, const Matrix& g) {
                            const Eigen::VectorXd dots = y.cwiseProduct(g).rowwise().sum();
                            t.accumulate_expr(a, y.cwiseProduct(g - Matrix(dots.replicate(1, y.cols()))));
                          });
}

Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("hconcat: no operands");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require_same_tape("hconcat", parts[0], p);
    if (p.rows() != rows) shape_error("hconcat", "row count mismatch " + dims(p.value()));
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts[0].tape()->record("hconcat", std::move(v), parts, [keep](Tape& t, const Matrix&, const Matrix& g) {
    Eigen::Index c0 = 0;
    for (const Var& p : keep) {
      t.accumulate_expr(p, g.middleCols(c0, p.cols()));
      c0 += p.cols();
    }
  });
}

Var vconcat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("vconcat: no operands");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require_same_tape("vconcat", parts[0], p);
    if (p.cols() != cols) shape_error("vconcat", "column count mismatch " + dims(p.value()));
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts[0].tape()->record("vconcat", std::move(v), parts, [keep](Tape& t, const Matrix&, const Matrix& g) {
    Eigen::Index r0 = 0;
    for (const Var& p : keep) {
      t.accumulate_expr(p, g.middleRows(r0, p.rows()));
      r0 += p.rows();
    }
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size())
    shape_error("reshape", dims(a.value()) + " -> " + std::to_string(rows) + "x" + std::to_string(cols));
  Matrix v = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const Eigen::Index r0 = a.rows();
  const Eigen::Index c0 = a.cols();
  return a.tape()->record("reshape", std::move(v), {a}, [a, r0, c0](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate_expr(a, Eigen::Map<const Matrix>(g.data(), r0, c0));
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    shape_error("slice_rows", "range out of bounds for " + dims(a.value()));
  Matrix v = a.value().middleRows(start, count);
  return a.tape()->record("slice_rows", std::move(v), {a},
                          [a, start, count](Tape& t, const Matrix&, const Matrix& g) {
                            if (!t.needs_grad(a)) return;
                            Matrix full = Matrix::Zero(a.rows(), a.cols());
                            full.middleRows(start, count) = g;
                            t.accumulate(a, full);
                          });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    shape_error("slice_cols", "range out of bounds for " + dims(a.value()));
  Matrix v = a.value().middleCols(start, count);
  return a.tape()->record("slice_cols", std::move(v), {a},
                          [a, start, count](Tape& t, const Matrix&, const Matrix& g) {
                            if (!t.needs_grad(a)) return;
                            Matrix full = Matrix::Zero(a.rows(), a.cols());
                            full.middleCols(start, count) = g;
                            t.accumulate(a, full);
                          });
}

Var gather_rows(Var a, std::span<const int> index) {
  Matrix v(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= a.rows()) shape_error("gather_rows", "index out of range");
    v.row(static_cast<Eigen::Index>(k)) = a.value().row(index[k]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return a.tape()->record("gather_rows", std::move(v), {a}, [a, idx](Tape& t, const Matrix&, const Matrix& g) {
    if (!t.needs_grad(a)) return;
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) full.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    t.accumulate(a, full);
  });
}

Var gather_cols(Var a, std::span<const int> index) {
  Matrix v(a.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= a.cols()) shape_error("gather_cols", "index out of range");
    v.col(static_cast<Eigen::Index>(k)) = a.value().col(index[k]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return a.tape()->record("gather_cols", std::move(v), {a}, [a, idx](Tape& t, const Matrix&, const Matrix& g) {
    if (!t.needs_grad(a)) return;
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) full.col(idx[k]) += g.col(static_cast<Eigen::Index>(k));
    t.accumulate(a, full);
  });
}

Var add_row(Var a, Var b) {
  require_same_tape("add_row", a, b);
  if (b.rows() != 1 || b.cols() != a.cols())
    shape_error("add_row", "bias " + dims(b.value()) + " for " + dims(a.value()));
  Matrix v = a.value().rowwise() + b.value().row(0);
  return a.tape()->record("add_row", std::move(v), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) t.accumulate_expr(b, g.colwise().sum());
  });
}

Var tile_rows(Var a, Eigen::Index times) {
  if (times < 1) shape_error("tile_rows", "times must be >= 1");
  Matrix v = a.value().replicate(times, 1);
  return a.tape()->record("tile_rows", std::move(v), {a}, [a, times](Tape& t, const Matrix&, const Matrix& g) {
    if (!t.needs_grad(a)) return;
    Matrix acc = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index k = 0; k < times; ++k) acc += g.middleRows(k * a.rows(), a.rows());
    t.accumulate(a, acc);
  });
}

Var sum(Var a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.tape()->record("sum", std::move(v), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate_expr(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) shape_error("mean", "empty operand");
  Matrix v(1, 1);
  const double n = static_cast<double>(a.value().size());
  v(0, 0) = a.value().sum() / n;
  return a.tape()->record("mean", std::move(v), {a}, [a, n](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate_expr(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

Var mse(Var a, Var b) {
  require_same_shape("mse", a, b);
  if (a.value().size() == 0) shape_error("mse", "empty operand");
  const double n = static_cast<double>(a.value().size());
  Matrix v(1, 1);
  v(0, 0) = (a.value() - b.value()).squaredNorm() / n;
  return a.tape()->record("mse", std::move(v), {a, b}, [a, b, n](Tape& t, const Matrix&, const Matrix& g) {
    const Matrix d = (2.0 * g(0, 0) / n) * (a.value() - b.value());
    t.accumulate(a, d);
    t.accumulate_expr(b, -d);
  });
}

// ---------------------------------------------------------------------------

namespace {

Eigen::Index block_rows(const char* op, const Var& a, Eigen::Index blocks) {
  if (blocks < 1 || a.rows() % blocks != 0)
    shape_error(op, std::to_string(a.rows()) + " rows do not split into " + std::to_string(blocks) + " blocks");
  return a.rows() / blocks;
}

} // namespace

Var block_matmul(Var a, Var b, Eigen::Index blocks) {
  require_same_tape("block_matmul", a, b);
  const Eigen::Index ra = block_rows("block_matmul", a, blocks);
  const Eigen::Index rb = block_rows("block_matmul", b, blocks);
  if (a.cols() != rb) shape_error("block_matmul", "inner dimensions " + dims(a.value()) + " vs " + dims(b.value()));
  Matrix v(blocks * ra, b.cols());
  for (Eigen::Index f = 0; f < blocks; ++f)
    v.middleRows(f * ra, ra).noalias() = a.value().middleRows(f * ra, ra) * b.value().middleRows(f * rb, rb);
  return a.tape()->record("block_matmul", std::move(v), {a, b},
                          [a, b, blocks, ra, rb](Tape& t, const Matrix&, const Matrix& g) {
                            if (t.needs_grad(a)) {
                              Matrix ga(a.rows(), a.cols());
                              for (Eigen::Index f = 0; f < blocks; ++f)
                                ga.middleRows(f * ra, ra).noalias() =
                                    g.middleRows(f * ra, ra) * b.value().middleRows(f * rb, rb).transpose();
                              t.accumulate(a, ga);
                            }
                            if (t.needs_grad(b)) {
                              Matrix gb(b.rows(), b.cols());
                              for (Eigen::Index f = 0; f < blocks; ++f)
                                gb.middleRows(f * rb, rb).noalias() =
                                    a.value().middleRows(f * ra, ra).transpose() * g.middleRows(f * ra, ra);
                              t.accumulate(b, gb);
                            }
                          });
}

Var block_matmul_nt(Var a, Var b, Eigen::Index blocks) {
  require_same_tape("block_matmul_nt", a, b);
  const Eigen::Index ra = block_rows("block_matmul_nt", a, blocks);
  const Eigen::Index rb = block_rows("block_matmul_nt", b, blocks);
  if (a.cols() != b.cols()) shape_error("block_matmul_nt", "column mismatch " + dims(a.value()) + " vs " + dims(b.value()));
  Matrix v(blocks * ra, rb);
  for (Eigen::Index f = 0; f < blocks; ++f)
    v.middleRows(f * ra, ra).noalias() =
        a.value().middleRows(f * ra, ra) * b.value().middleRows(f * rb, rb).transpose();
  return a.tape()->record("block_matmul_nt", std::move(v), {a, b},
                          [a, b, blocks, ra, rb](Tape& t, const Matrix&, const Matrix& g) {
                            if (t.needs_grad(a)) {
                              Matrix ga(a.rows(), a.cols());
                              for (Eigen::Index f = 0; f < blocks; ++f)
                                ga.middleRows(f * ra, ra).noalias() =
                                    g.middleRows(f * ra, ra) * b.value().middleRows(f * rb, rb);
                              t.accumulate(a, ga);
                            }
                            if (t.needs_grad(b)) {
                              Matrix gb(b.rows(), b.cols());
                              for (Eigen::Index f = 0; f < blocks; ++f)
                                gb.middleRows(f * rb, rb).noalias() =
                                    g.middleRows(f * ra, ra).transpose() * a.value().middleRows(f * ra, ra);
                              t.accumulate(b, gb);
                            }
                          });
}

Var block_softmax_cols(Var a, Eigen::Index blocks) {
  const Eigen::Index r = block_rows("block_softmax_cols", a, blocks);
  Matrix v(a.rows(), a.cols());
  for (Eigen::Index f = 0; f < blocks; ++f) v.middleRows(f * r, r) = softmax_cols_value(a.value().middleRows(f * r, r));
  return a.tape()->record("block_softmax_cols", std::move(v), {a},
                          [a, blocks, r](Tape& t, const Matrix& y, const Matrix& g) {
                            Matrix ga(a.rows(), a.cols());
                            for (Eigen::Index f = 0; f < blocks; ++f) {
                              const auto yb = y.middleRows(f * r, r);
                              const auto gbk = g.middleRows(f * r, r);
                              const Eigen::RowVectorXd dots = yb.cwiseProduct(gbk).colwise().sum();
                              ga.middleRows(f * r, r) = yb.cwiseProduct(gbk - Matrix(dots.replicate(r, 1)));
                            }
                            t.accumulate(a, ga);
                          });
}

Var block_transpose(Var a, Eigen::Index blocks) {
  const Eigen::Index r = block_rows("block_transpose", a, blocks);
  const Eigen::Index c = a.cols();
  Matrix v(blocks * c, r);
  for (Eigen::Index f = 0; f < blocks; ++f) v.middleRows(f * c, c) = a.value().middleRows(f * r, r).transpose();
  return a.tape()->record("block_transpose", std::move(v), {a},
                          [a, blocks, r, c](Tape& t, const Matrix&, const Matrix& g) {
                            Matrix ga(a.rows(), a.cols());
                            for (Eigen::Index f = 0; f < blocks; ++f)
                              ga.middleRows(f * r, r) = g.middleRows(f * c, c).transpose();
                            t.accumulate(a, ga);
                          });
}

} // namespace pscape::ad
