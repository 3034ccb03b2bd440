#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pscape/autodiff.hpp"
#include "pscape/linalg.hpp"

namespace pscape {

/// Diffusion wavelets Psi_0..Psi_J plus the low-pass operator.
///
/// With scales t_1 < ... < t_{J+1}: Psi_0 = I - P^{t_1},
/// Psi_j = P^{t_j} - P^{t_{j+1}}, lowpass = P^{t_{J+1}}. A learnable bank
/// replaces each P^{t_j} by a softmax-weighted mix of powers.
struct WaveletBank {
  enum class Kind { dyadic, generalized, learnable };

  Kind kind = Kind::dyadic;
  int J = 0;
  std::vector<int> scales;       // hard scales; empty for learnable banks
  Matrix selection;              // (J+1) x t_max softmax weights; learnable banks only
  std::vector<Matrix> operators; // Psi_0..Psi_J
  Matrix lowpass;

  int size() const noexcept { return static_cast<int>(lowpass.rows()); }
};

/// Dyadic scales t_j = 2^(j-1), j = 1..J+1.
WaveletBank dyadic_bank(const Matrix& diffusion, int J);

/// Hard scales; `scales` must be strictly increasing positive integers.
WaveletBank generalized_bank(const Matrix& diffusion, std::span<const int> scales);

/// Soft scales from logits `theta` ((J+1) x t_max): row j is softmax-weighted
/// over diffusion steps 1..t_max.
WaveletBank learnable_bank(const Matrix& diffusion, const Matrix& theta, int t_max);

/// Recipe for building the same kind of bank on different graphs: learnable
/// when `theta` is non-empty, else generalized when `scales` is non-empty,
/// else dyadic with `J`.
struct BankConfig {
  int J = 4;
  std::vector<int> scales;
  Matrix theta;
  int t_max = 16;

  WaveletBank build(const Matrix& diffusion) const;
};

/// Max |sum Psi_j + lowpass - I| over entries.
double telescoping_residual(const WaveletBank& bank);

/// Logits with `logit` on column t_j - 1 of row j and -logit elsewhere. At
/// logit 30 the soft bank matches the hard-scale bank to ~1e-26.
Matrix selection_logits(std::span<const int> scales, int t_max, double logit);

/// Initial logits: dyadic scales when 2^J <= t_max, otherwise evenly spread.
Matrix initial_selection(int J, int t_max, double logit = 3.0);

/// E_j = sum_t t * softmax(theta_j)[t].
std::vector<double> expected_scales(const Matrix& theta);
bool scales_increasing(const Matrix& theta);

/// Coefficients per channel per residue, channel-major then order-major:
/// for each channel c the block [lowpass, |Psi_0 x|..|Psi_J x|,
/// |Psi_j2 |Psi_j1 x|| for j1 < j2 in lexicographic order].
inline int features_per_channel(int J) { return 1 + (J + 1) + J * (J + 1) / 2; }

struct ScatteringOutput {
  int J = 0;
  int channels = 0;
  Matrix coeffs; // n x channels * features_per_channel(J)
};

ScatteringOutput scatter(const WaveletBank& bank, const Matrix& x);

/// Labels `(order,j1[,j2],channel)`; channel is the amino-acid letter when
/// `channels` is 20, else its index.
std::vector<std::string> feature_labels(int J, int channels);

/// CSV with a quoted label header row and one row per residue.
void write_scattering_csv(std::ostream& os, const ScatteringOutput& out);

// ---------------------------------------------------------------------------
// Batched, differentiable path used by the model.

/// Row t-1 holds the row-major flattening of P_f^t for every frame f, frames
/// concatenated: t_max x (frames * n * n).
Matrix power_table(std::span<const Matrix> diffusions, int t_max);

/// Soft operators P~_1..P~_{J+1}, each stacked over frames as (frames*n) x n.
std::vector<ad::Var> soft_scale_operators(ad::Var theta, ad::Var power_table, Eigen::Index frames, Eigen::Index n);

/// Scattering of stacked signals x ((frames*n) x C) through the soft
/// operators. Returns (frames*n) x C*features_per_channel(J) in the same
/// layout as `scatter`.
ad::Var scatter_batched(std::span<const ad::Var> soft, ad::Var x, Eigen::Index frames);

} // namespace pscape
