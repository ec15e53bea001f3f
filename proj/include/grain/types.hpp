#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grain {

/// Per-particle planar coordinates, one row per particle, (x, y) contiguous.
template <typename Scalar>
using Coords = Eigen::Matrix<Scalar, Eigen::Dynamic, 2, Eigen::RowMajor>;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

using Coordsd = Coords<double>;
using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;

enum class Axis { x = 0, y = 1 };

inline int axis_index(Axis a) { return static_cast<int>(a); }
inline char axis_name(Axis a) { return a == Axis::x ? 'x' : 'y'; }

// Error hierarchy. The CLI maps each family onto its own exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class SimulationFailure : public Error {
 public:
  SimulationFailure(const std::string& what, std::ptrdiff_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::ptrdiff_t step() const { return step_; }

 private:
  std::ptrdiff_t step_;
};

class GradientFailure : public Error {
 public:
  GradientFailure(const std::string& what, std::ptrdiff_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::ptrdiff_t step() const { return step_; }

 private:
  std::ptrdiff_t step_;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace grain
