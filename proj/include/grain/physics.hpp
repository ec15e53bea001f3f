#pragma once

#include "grain/types.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace grain {

/// Material description of the crystal. Stiffness is per particle and is the
/// only trainable quantity; mass, diameter and the contact exponent are shared.
struct MaterialParams {
  Eigen::VectorXd stiffness;
  double mass = 1.0;
  double diameter = 0.1;
  double alpha = 2.5;

  static constexpr double k_min = 1.0;
  static constexpr double k_max = 10.0;

  Eigen::Index size() const { return stiffness.size(); }
  void validate() const;
  static MaterialParams uniform(Eigen::Index n, double k, double mass = 1.0, double diameter = 0.1,
                                double alpha = 2.5);
};

/// Rectangular confinement with walls at lower/upper corners and the lattice
/// the particles were placed on.
struct PackingGeometry {
  Vec2d lower = Vec2d::Zero();
  Vec2d upper = Vec2d::Zero();
  int nx = 0;
  int ny = 0;
  Coordsd equilibrium;  // delta_0, one row per particle

  Vec2d box() const { return upper - lower; }
  double area() const { return box().prod(); }
  Eigen::Index size() const { return equilibrium.rows(); }
  int index(int row, int col) const { return row * nx + col; }
};

struct ParticleState {
  Coordsd positions;
  Coordsd velocities;
  Coordsd accelerations;  // integrator carry; recomputed by total_forces when needed
  double time = 0.0;

  static ParticleState at_rest(const Coordsd& positions);
  bool finite() const;
};

struct DampingParams {
  double background = 1.0;
  double particle_particle = 0.0;
  double particle_wall = 0.0;
  void validate() const;
};

enum class NeighborSearch { all_pairs, cell_list };

// ---------------------------------------------------------------------------
// Contact laws. Templated on the scalar so they can be reused by oracles.

/// Case split as written: equal stiffnesses combine to the common value,
/// unequal ones to the harmonic combination k_i k_j / (k_i + k_j).
template <typename Scalar>
Scalar effective_stiffness(Scalar ki, Scalar kj) {
  if (!(ki > Scalar(0)) || !(kj > Scalar(0)))
    throw DomainError("effective_stiffness: stiffness must be positive");
  if (ki == kj) return ki;
  return ki * kj / (ki + kj);
}

/// Partial derivatives of the harmonic branch, used for gradients everywhere.
template <typename Scalar>
std::pair<Scalar, Scalar> effective_stiffness_partials(Scalar ki, Scalar kj) {
  const Scalar s = ki + kj;
  return {kj * kj / (s * s), ki * ki / (s * s)};
}

template <typename Scalar>
Scalar pair_potential(Scalar r, Scalar sigma, Scalar eps, Scalar alpha) {
  if (!(r < sigma)) return Scalar(0);
  return eps / alpha * std::pow(Scalar(1) - r / sigma, alpha);
}

/// Magnitude of the repulsion at separation r, zero outside contact.
template <typename Scalar>
Scalar pair_force_magnitude(Scalar r, Scalar sigma, Scalar eps, Scalar alpha) {
  if (!(r < sigma)) return Scalar(0);
  return eps / sigma * std::pow(Scalar(1) - r / sigma, alpha - Scalar(1));
}

/// d(magnitude)/dr; defined as 0 at and beyond the contact boundary.
template <typename Scalar>
Scalar pair_force_slope(Scalar r, Scalar sigma, Scalar eps, Scalar alpha) {
  if (!(r < sigma)) return Scalar(0);
  return -eps / (sigma * sigma) * (alpha - Scalar(1)) * std::pow(Scalar(1) - r / sigma, alpha - Scalar(2));
}

/// Force on particle i exerted by particle j.
template <typename Scalar>
Vec2<Scalar> pair_force_2d(const Vec2<Scalar>& ri, const Vec2<Scalar>& rj, Scalar sigma, Scalar eps,
                           Scalar alpha) {
  const Vec2<Scalar> d = ri - rj;
  const Scalar r = d.norm();
  if (!(r < sigma)) return Vec2<Scalar>::Zero();
  if (r == Scalar(0)) throw SimulationFailure("pair_force_2d: coincident particle centers", -1);
  return pair_force_magnitude(r, sigma, eps, alpha) / r * d;
}

/// One-sided wall repulsion summed over the four walls. The wall acts over a
/// gap of half a diameter.
template <typename Scalar>
Vec2<Scalar> wall_force(const Vec2<Scalar>& ri, const Vec2<Scalar>& lower, const Vec2<Scalar>& upper,
                        Scalar sigma_i, Scalar eps, Scalar alpha) {
  const Scalar s = sigma_i / Scalar(2);
  Vec2<Scalar> f = Vec2<Scalar>::Zero();
  for (int a = 0; a < 2; ++a) {
    f[a] += pair_force_magnitude(ri[a] - lower[a], s, eps, alpha);
    f[a] -= pair_force_magnitude(upper[a] - ri[a], s, eps, alpha);
  }
  return f;
}

template <typename Scalar>
Scalar wall_potential(const Vec2<Scalar>& ri, const Vec2<Scalar>& lower, const Vec2<Scalar>& upper,
                      Scalar sigma_i, Scalar eps, Scalar alpha) {
  const Scalar s = sigma_i / Scalar(2);
  Scalar v(0);
  for (int a = 0; a < 2; ++a) {
    v += pair_potential(ri[a] - lower[a], s, eps, alpha);
    v += pair_potential(upper[a] - ri[a], s, eps, alpha);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Neighbor search.

using PairList = std::vector<std::pair<int, int>>;

/// All pairs (i < j) with separation below cutoff, lexicographically sorted.
PairList candidate_pairs(const Coordsd& x, double cutoff, NeighborSearch mode, const Vec2d& lower,
                         const Vec2d& upper);

/// Evaluates forces of one packing. Holds a Verlet neighbor list that is
/// rebuilt lazily; contributions are accumulated in sorted pair order so the
/// result does not depend on which candidates the list happens to contain.
class ForceField {
 public:
  ForceField(const MaterialParams& params, const PackingGeometry& geometry, const DampingParams& damping,
             NeighborSearch search = NeighborSearch::cell_list, double skin = 0.3);

  /// Pair plus wall forces.
  void conservative(const Coordsd& x, Coordsd& force);
  /// Particle-particle and particle-wall dashpots (background drag excluded).
  void contact_dashpots(const Coordsd& x, const Coordsd& v, Coordsd& force);
  double potential(const Coordsd& x);

  /// Accumulates J^T fbar into xbar, where J = d(conservative)/dx, and the
  /// stiffness sensitivities (fbar . dF/dk) into kbar.
  void conservative_vjp(const Coordsd& x, const Coordsd& fbar, Coordsd& xbar, Eigen::VectorXd& kbar);
  /// Accumulates (d dashpots / dv)^T fbar into vbar.
  void dashpot_vjp(const Coordsd& x, const Coordsd& fbar, Coordsd& vbar);

  int contact_count(const Coordsd& x, int particle);
  const PairList& pairs(const Coordsd& x);

  const MaterialParams& params() const { return params_; }
  const PackingGeometry& geometry() const { return geometry_; }
  const DampingParams& damping() const { return damping_; }

 private:
  void refresh(const Coordsd& x);
  double pair_eps(int i, int j) const;

  const MaterialParams& params_;
  const PackingGeometry& geometry_;
  DampingParams damping_;
  NeighborSearch search_;
  double skin_;
  PairList pairs_;
  Coordsd reference_;
};

/// Accelerations of every particle with all dissipation evaluated at the
/// state's velocities.
Coordsd total_forces(const ParticleState& state, const MaterialParams& params, const PackingGeometry& geometry,
                     const DampingParams& damping, const Coordsd* external = nullptr,
                     NeighborSearch search = NeighborSearch::all_pairs);

struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic + potential; }
};

EnergyBreakdown total_energy(const ParticleState& state, const MaterialParams& params,
                             const PackingGeometry& geometry);

Eigen::VectorXd clamp_stiffness(const Eigen::VectorXd& k, double lo = MaterialParams::k_min,
                                double hi = MaterialParams::k_max);

}  // namespace grain
