#include "pscape/scattering.hpp"

#include <cmath>
#include <ostream>

#include "pscape/diffusion_ops.hpp"
#include "pscape/error.hpp"
#include "pscape/trajectory_io.hpp"

namespace pscape {

namespace {

void require_square(const char* op, const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ShapeError(std::string(op) + ": diffusion operator must be square");
}

WaveletBank bank_from_scale_operators(const std::vector<Matrix>& soft, int n) {
  WaveletBank bank;
  bank.J = static_cast<int>(soft.size()) - 1;
  bank.operators.reserve(soft.size());
  bank.operators.push_back(Matrix::Identity(n, n) - soft[0]);
  for (std::size_t j = 0; j + 1 < soft.size(); ++j) bank.operators.push_back(soft[j] - soft[j + 1]);
  bank.lowpass = soft.back();
  return bank;
}

} // namespace

WaveletBank dyadic_bank(const Matrix& diffusion, int J) {
  if (J < 1) throw ArgumentError("dyadic_bank: J must be >= 1");
  std::vector<int> scales;
  for (int j = 0; j <= J; ++j) scales.push_back(1 << j);
  WaveletBank bank = generalized_bank(diffusion, scales);
  bank.kind = WaveletBank::Kind::dyadic;
  return bank;
}

WaveletBank generalized_bank(const Matrix& diffusion, std::span<const int> scales) {
  require_square("generalized_bank", diffusion);
  if (scales.size() < 2) throw ArgumentError("generalized_bank: need at least two scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1 || (i > 0 && scales[i] <= scales[i - 1]))
      throw ArgumentError("generalized_bank: scales must be strictly increasing positive integers");
  }
  const auto powers = matrix_power_cascade(diffusion, scales.back());
  std::vector<Matrix> soft;
  for (int t : scales) soft.push_back(powers[t]);
  WaveletBank bank = bank_from_scale_operators(soft, static_cast<int>(diffusion.rows()));
  bank.kind = WaveletBank::Kind::generalized;
  bank.scales.assign(scales.begin(), scales.end());
  return bank;
}

WaveletBank learnable_bank(const Matrix& diffusion, const Matrix& theta, int t_max) {
  require_square("learnable_bank", diffusion);
  if (theta.cols() != t_max) throw ArgumentError("learnable_bank: theta must have t_max columns");
  if (theta.rows() < 2) throw ArgumentError("learnable_bank: theta must have J+1 >= 2 rows");
  if (t_max < theta.rows()) throw ArgumentError("learnable_bank: t_max must be >= J+1");
  if (!theta.allFinite()) throw ArgumentError("learnable_bank: non-finite logits");
  const Matrix s = ad::softmax_rows_value(theta);
  const auto powers = matrix_power_cascade(diffusion, t_max);
  const auto n = diffusion.rows();
  std::vector<Matrix> soft;
  for (Eigen::Index j = 0; j < theta.rows(); ++j) {
    Matrix acc = Matrix::Zero(n, n);
    for (int t = 1; t <= t_max; ++t) acc += s(j, t - 1) * powers[t];
    soft.push_back(std::move(acc));
  }
  WaveletBank bank = bank_from_scale_operators(soft, static_cast<int>(n));
  bank.kind = WaveletBank::Kind::learnable;
  bank.selection = s;
  return bank;
}

WaveletBank BankConfig::build(const Matrix& diffusion) const {
  if (theta.size() > 0) return learnable_bank(diffusion, theta, t_max);
  if (!scales.empty()) return generalized_bank(diffusion, scales);
  return dyadic_bank(diffusion, J);
}

double telescoping_residual(const WaveletBank& bank) {
  const int n = bank.size();
  Matrix sum = bank.lowpass;
  for (const auto& op : bank.operators) sum += op;
  return (sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

Matrix selection_logits(std::span<const int> scales, int t_max, double logit) {
  Matrix theta = Matrix::Zero(static_cast<Eigen::Index>(scales.size()), t_max);
  for (std::size_t j = 0; j < scales.size(); ++j) {
    if (scales[j] < 1 || scales[j] > t_max) throw ArgumentError("selection_logits: scale outside 1..t_max");
    theta(static_cast<Eigen::Index>(j), scales[j] - 1) = logit;
  }
  if (logit > 0.0) {
    for (Eigen::Index j = 0; j < theta.rows(); ++j)
      for (Eigen::Index t = 0; t < t_max; ++t)
        if (theta(j, t) == 0.0) theta(j, t) = -logit;
  }
  return theta;
}

Matrix initial_selection(int J, int t_max, double logit) {
  if (J < 1 || t_max < J + 1) throw ArgumentError("initial_selection: need J >= 1 and t_max >= J+1");
  std::vector<int> scales;
  if ((1 << J) <= t_max) {
    for (int j = 0; j <= J; ++j) scales.push_back(1 << j);
  } else {
    for (int j = 0; j <= J; ++j)
      scales.push_back(1 + static_cast<int>(std::lround(static_cast<double>(j) * (t_max - 1) / J)));
  }
  Matrix theta = Matrix::Zero(J + 1, t_max);
  for (int j = 0; j <= J; ++j) theta(j, scales[j] - 1) = logit;
  return theta;
}

std::vector<double> expected_scales(const Matrix& theta) {
  const Matrix s = ad::softmax_rows_value(theta);
  std::vector<double> e;
  for (Eigen::Index j = 0; j < s.rows(); ++j) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < s.cols(); ++t) acc += static_cast<double>(t + 1) * s(j, t);
    e.push_back(acc);
  }
  return e;
}

bool scales_increasing(const Matrix& theta) {
  const auto e = expected_scales(theta);
  for (std::size_t j = 1; j < e.size(); ++j)
    if (!(e[j] > e[j - 1])) return false;
  return true;
}

ScatteringOutput scatter(const WaveletBank& bank, const Matrix& x) {
  if (x.cols() < 1) throw ArgumentError("scatter: signal needs at least one channel");
  if (x.rows() != bank.size()) throw ShapeError("scatter: signal rows do not match bank size");
  const int J = bank.J;
  const int C = static_cast<int>(x.cols());
  const int K = features_per_channel(J);
  ScatteringOutput out;
  out.J = J;
  out.channels = C;
  out.coeffs.resize(x.rows(), static_cast<Eigen::Index>(C) * K);

  std::vector<Matrix> first;
  for (const auto& op : bank.operators) first.push_back((op * x).cwiseAbs());
  const Matrix zeroth = bank.lowpass * x;

  auto put = [&](int k, const Matrix& block) {
    for (int c = 0; c < C; ++c) out.coeffs.col(static_cast<Eigen::Index>(c) * K + k) = block.col(c);
  };
  int k = 0;
  put(k++, zeroth);
  for (const auto& f : first) put(k++, f);
  for (int j1 = 0; j1 <= J; ++j1)
    for (int j2 = j1 + 1; j2 <= J; ++j2) put(k++, (bank.operators[j2] * first[j1]).cwiseAbs());
  return out;
}

std::vector<std::string> feature_labels(int J, int channels) {
  std::vector<std::string> labels;
  for (int c = 0; c < channels; ++c) {
    const std::string ch = channels == kAlphabetSize ? std::string(1, kAminoAcids[c]) : std::to_string(c);
    labels.push_back("(0,0," + ch + ")");
    for (int j = 0; j <= J; ++j) labels.push_back("(1," + std::to_string(j) + "," + ch + ")");
    for (int j1 = 0; j1 <= J; ++j1)
      for (int j2 = j1 + 1; j2 <= J; ++j2)
        labels.push_back("(2," + std::to_string(j1) + "," + std::to_string(j2) + "," + ch + ")");
  }
  return labels;
}

void write_scattering_csv(std::ostream& os, const ScatteringOutput& out) {
  const auto labels = feature_labels(out.J, out.channels);
  for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << '"' << labels[i] << '"';
  os << '\n';
  for (Eigen::Index r = 0; r < out.coeffs.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.coeffs.cols(); ++c) os << (c ? "," : "") << format_double(out.coeffs(r, c));
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

Matrix power_table(std::span<const Matrix> diffusions, int t_max) {
  if (diffusions.empty()) throw ArgumentError("power_table: no frames");
  if (t_max < 1) throw ArgumentError("power_table: t_max must be >= 1");
  const auto n = diffusions[0].rows();
  const auto nn = n * n;
  Matrix table(t_max, static_cast<Eigen::Index>(diffusions.size()) * nn);
  for (std::size_t f = 0; f < diffusions.size(); ++f) {
    if (diffusions[f].rows() != n || diffusions[f].cols() != n) throw ShapeError("power_table: frames differ in size");
    Matrix pw = diffusions[f];
    for (int t = 1; t <= t_max; ++t) {
      if (t > 1) pw = pw * diffusions[f];
      table.block(t - 1, static_cast<Eigen::Index>(f) * nn, 1, nn) = Eigen::Map<const Eigen::RowVectorXd>(pw.data(), nn);
    }
  }
  return table;
}

std::vector<ad::Var> soft_scale_operators(ad::Var theta, ad::Var table, Eigen::Index frames, Eigen::Index n) {
  if (theta.cols() != table.rows()) throw ShapeError("soft_scale_operators: theta columns must equal t_max");
  if (table.cols() != frames * n * n) throw ShapeError("soft_scale_operators: power table width mismatch");
  ad::Var mixed = ad::matmul(ad::softmax_rows(theta), table);
  std::vector<ad::Var> soft;
  for (Eigen::Index j = 0; j < theta.rows(); ++j) soft.push_back(ad::reshape(ad::slice_rows(mixed, j, 1), frames * n, n));
  return soft;
}

ad::Var scatter_batched(std::span<const ad::Var> soft, ad::Var x, Eigen::Index frames) {
  if (soft.size() < 2) throw ArgumentError("scatter_batched: need J+1 >= 2 soft operators");
  const int J = static_cast<int>(soft.size()) - 1;
  const int C = static_cast<int>(x.cols());
  const int K = features_per_channel(J);

  // Y[j] = P~_{j+1} x; Psi_0 x = x - Y[0]; Psi_j x = Y[j-1] - Y[j].
  std::vector<ad::Var> y;
  for (const auto& s : soft) y.push_back(ad::block_matmul(s, x, frames));
  std::vector<ad::Var> first;
  first.push_back(ad::abs(x - y[0]));
  for (int j = 1; j <= J; ++j) first.push_back(ad::abs(y[j - 1] - y[j]));

  std::vector<ad::Var> pieces;
  pieces.push_back(y[J]);
  for (const auto& f : first) pieces.push_back(f);
  for (int j1 = 0; j1 < J; ++j1) {
    // P~_k |Psi_j1 x| for k = j1+1..J+1 (1-based soft index), reused across j2.
    std::vector<ad::Var> py(static_cast<std::size_t>(J + 1));
    for (int k = j1; k <= J; ++k) py[k] = ad::block_matmul(soft[k], first[j1], frames);
    for (int j2 = j1 + 1; j2 <= J; ++j2) pieces.push_back(ad::abs(py[j2 - 1] - py[j2]));
  }
  ad::Var order_major = ad::hconcat(pieces);

  std::vector<int> perm(static_cast<std::size_t>(C) * K);
  for (int c = 0; c < C; ++c)
    for (int k = 0; k < K; ++k) perm[static_cast<std::size_t>(c) * K + k] = k * C + c;
  return ad::gather_cols(order_major, perm);
}

} // namespace pscape
