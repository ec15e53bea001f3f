#pragma once

#include "grain/types.hpp"

#include <complex>
#include <span>
#include <vector>

namespace grain {

// ---------------------------------------------------------------------------
// Cross-entropy over normalized port intensities.

struct CrossEntropyResult {
  double value = 0.0;
  std::vector<double> per_sample;           // un-averaged per-sample terms
  std::vector<Eigen::Vector2d> d_intensity;  // dL/d(raw intensity pair)
};

/// Each sample's raw intensity pair is normalized to sum one, then
/// L = -(1/N) sum log softmax(normalized)_c with c the hot index of the target.
CrossEntropyResult cross_entropy(std::span<const Eigen::Vector2d> intensities, std::span<const Eigen::Vector2d> targets);

double cross_entropy_loss(std::span<const Eigen::Vector2d> intensities, std::span<const Eigen::Vector2d> targets);

// ---------------------------------------------------------------------------
// Mean absolute error between windowed series.

/// mean_t |target_t - output_t|
double mae_loss(const Eigen::Ref<const Eigen::VectorXd>& output, const Eigen::Ref<const Eigen::VectorXd>& target);

/// Subgradient of mae_loss with respect to the output (0 where they agree).
Eigen::VectorXd mae_grad(const Eigen::Ref<const Eigen::VectorXd>& output, const Eigen::Ref<const Eigen::VectorXd>& target);

/// Mean over samples of the per-sample MAE.
double mae_loss(std::span<const Eigen::VectorXd> outputs, std::span<const Eigen::VectorXd> targets);

// ---------------------------------------------------------------------------
// Spectral helpers.

/// Number of trailing samples used for the gain estimate.
inline constexpr Eigen::Index kSpectralWindow = 1000;

/// Bin closest to frequency f for n samples spaced dt apart.
Eigen::Index nearest_bin(double frequency, Eigen::Index n, double dt);

/// One DFT coefficient, sum_n x_n exp(-2 pi i k n / N).
std::complex<double> dft_bin(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index k);

/// d|X_k| / dx_n; zero vector when |X_k| = 0.
Eigen::VectorXd dft_magnitude_grad(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index k);

/// |FFT(x)| for bins 0..N/2.
Eigen::VectorXd amplitude_spectrum(const Eigen::Ref<const Eigen::VectorXd>& x);

/// |F(output)|_f / (|F(input1)|_f + |F(input2)|_f) over the last kSpectralWindow samples.
double spectral_gain(const Eigen::Ref<const Eigen::VectorXd>& input1, const Eigen::Ref<const Eigen::VectorXd>& input2,
                     const Eigen::Ref<const Eigen::VectorXd>& output, double frequency, double dt);

/// Gain and its gradient with respect to the full output series (zero outside the window).
double spectral_gain_with_grad(const Eigen::Ref<const Eigen::VectorXd>& input1,
                               const Eigen::Ref<const Eigen::VectorXd>& input2,
                               const Eigen::Ref<const Eigen::VectorXd>& output, double frequency, double dt,
                               Eigen::VectorXd& d_output);

}  // namespace grain
