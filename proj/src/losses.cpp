#include "grain/losses.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace grain {

CrossEntropyResult cross_entropy(std::span<const Eigen::Vector2d> intensities, std::span<const Eigen::Vector2d> targets) {
  if (intensities.size() != targets.size() || intensities.empty())
    throw DomainError("cross_entropy: need one target per intensity pair");
  const double n = static_cast<double>(intensities.size());
  CrossEntropyResult out;
  for (std::size_t s = 0; s < intensities.size(); ++s) {
    const Eigen::Vector2d& raw = intensities[s];
    if (!(raw.minCoeff() >= 0.0)) throw DomainError("cross_entropy: intensities must be non-negative");
    const double sum = raw.sum();
    if (!(sum > 0.0)) throw DegenerateInput("cross_entropy: zero total intensity");
    const int c = targets[s][1] > targets[s][0] ? 1 : 0;
    const Eigen::Vector2d y = raw / sum;
    const double m = y.maxCoeff();
    const double lse = m + std::log(std::exp(y[0] - m) + std::exp(y[1] - m));
    const double term = lse - y[c];
    out.per_sample.push_back(term);
    out.value += term;

    // dL/dy = softmax(y) - onehot(c), then through y = raw / sum
    Eigen::Vector2d dy(std::exp(y[0] - lse), std::exp(y[1] - lse));
    dy[c] -= 1.0;
    dy /= n;
    const double proj = dy.dot(y);
    out.d_intensity.push_back((dy.array() - proj).matrix() / sum);
  }
  out.value /= n;
  return out;
}

double cross_entropy_loss(std::span<const Eigen::Vector2d> intensities, std::span<const Eigen::Vector2d> targets) {
  return cross_entropy(intensities, targets).value;
}

double mae_loss(const Eigen::Ref<const Eigen::VectorXd>& output, const Eigen::Ref<const Eigen::VectorXd>& target) {
  if (output.size() != target.size()) throw DomainError("mae_loss: length mismatch");
  if (output.size() == 0) throw DomainError("mae_loss: empty series");
  return (target - output).cwiseAbs().mean();
}

Eigen::VectorXd mae_grad(const Eigen::Ref<const Eigen::VectorXd>& output, const Eigen::Ref<const Eigen::VectorXd>& target) {
  if (output.size() != target.size()) throw DomainError("mae_loss: length mismatch");
  const double inv = 1.0 / static_cast<double>(output.size());
  return (output - target).unaryExpr([inv](double d) { return d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0); });
}

double mae_loss(std::span<const Eigen::VectorXd> outputs, std::span<const Eigen::VectorXd> targets) {
  if (outputs.size() != targets.size() || outputs.empty()) throw DomainError("mae_loss: sample count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) sum += mae_loss(outputs[i], targets[i]);
  return sum / static_cast<double>(outputs.size());
}

// ---------------------------------------------------------------------------

Eigen::Index nearest_bin(double frequency, Eigen::Index n, double dt) {
  return static_cast<Eigen::Index>(std::llround(frequency * static_cast<double>(n) * dt));
}

std::complex<double> dft_bin(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index k) {
  const double w = -2.0 * std::numbers::pi / static_cast<double>(x.size());
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    // phase index reduced modulo N keeps the argument small
    const double angle = w * static_cast<double>((k * t) % x.size());
    acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
  }
  return acc;
}

Eigen::VectorXd dft_magnitude_grad(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index k) {
  const std::complex<double> X = dft_bin(x, k);
  const double mag = std::abs(X);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  if (mag == 0.0) return g;
  const double w = 2.0 * std::numbers::pi / static_cast<double>(x.size());
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    const double angle = w * static_cast<double>((k * t) % x.size());
    g[t] = (X.real() * std::cos(angle) - X.imag() * std::sin(angle)) / mag;
  }
  return g;
}

Eigen::VectorXd amplitude_spectrum(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::FFT<double> fft;
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  const Eigen::Index half = x.size() / 2 + 1;
  Eigen::VectorXd mag(half);
  for (Eigen::Index i = 0; i < half; ++i) mag[i] = std::abs(out[static_cast<std::size_t>(i)]);
  return mag;
}

namespace {

struct GainWindow {
  Eigen::Index start;
  Eigen::Index bin;
};

GainWindow gain_window(Eigen::Index length, double frequency, double dt) {
  if (length < kSpectralWindow) throw DomainError("spectral_gain: need at least 1000 samples");
  if (!(frequency > 0.0)) throw DomainError("spectral_gain: frequency must be positive");
  return {length - kSpectralWindow, nearest_bin(frequency, kSpectralWindow, dt)};
}

}  // namespace

double spectral_gain(const Eigen::Ref<const Eigen::VectorXd>& input1, const Eigen::Ref<const Eigen::VectorXd>& input2,
                     const Eigen::Ref<const Eigen::VectorXd>& output, double frequency, double dt) {
  Eigen::VectorXd unused;
  return spectral_gain_with_grad(input1, input2, output, frequency, dt, unused);
}

double spectral_gain_with_grad(const Eigen::Ref<const Eigen::VectorXd>& input1,
                               const Eigen::Ref<const Eigen::VectorXd>& input2,
                               const Eigen::Ref<const Eigen::VectorXd>& output, double frequency, double dt,
                               Eigen::VectorXd& d_output) {
  if (input1.size() != output.size() || input2.size() != output.size())
    throw DomainError("spectral_gain: series lengths differ");
  const auto [start, bin] = gain_window(output.size(), frequency, dt);
  const auto tail = [&](const Eigen::Ref<const Eigen::VectorXd>& s) { return s.segment(start, kSpectralWindow); };
  const double denom = std::abs(dft_bin(tail(input1), bin)) + std::abs(dft_bin(tail(input2), bin));
  if (!(denom > 0.0)) throw DegenerateInput("spectral_gain: inputs carry no energy at the drive frequency");
  const double num = std::abs(dft_bin(tail(output), bin));
  d_output = Eigen::VectorXd::Zero(output.size());
  d_output.segment(start, kSpectralWindow) = dft_magnitude_grad(tail(output), bin) / denom;
  return num / denom;
}

}  // namespace grain
