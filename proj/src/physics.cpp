#include "grain/physics.hpp"

#include <algorithm>

namespace grain {

void MaterialParams::validate() const {
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (!(diameter > 0.0)) throw DomainError("diameter must be positive");
  if (!(alpha > 1.0)) throw DomainError("contact exponent must exceed 1");
  if (stiffness.size() == 0) throw DomainError("stiffness vector is empty");
  if (!(stiffness.array() > 0.0).all()) throw DomainError("stiffness must be positive");
}

MaterialParams MaterialParams::uniform(Eigen::Index n, double k, double mass, double diameter, double alpha) {
  MaterialParams p;
  p.stiffness = Eigen::VectorXd::Constant(n, k);
  p.mass = mass;
  p.diameter = diameter;
  p.alpha = alpha;
  return p;
}

ParticleState ParticleState::at_rest(const Coordsd& positions) {
  ParticleState s;
  s.positions = positions;
  s.velocities = Coordsd::Zero(positions.rows(), 2);
  s.accelerations = Coordsd::Zero(positions.rows(), 2);
  return s;
}

bool ParticleState::finite() const {
  return positions.allFinite() && velocities.allFinite() && std::isfinite(time);
}

void DampingParams::validate() const {
  if (background < 0.0 || particle_particle < 0.0 || particle_wall < 0.0)
    throw DomainError("damping coefficients must be non-negative");
}

Eigen::VectorXd clamp_stiffness(const Eigen::VectorXd& k, double lo, double hi) {
  return k.cwiseMax(lo).cwiseMin(hi);
}

// ---------------------------------------------------------------------------

namespace {

PairList all_pairs(const Coordsd& x, double cutoff) {
  PairList out;
  const double c2 = cutoff * cutoff;
  const int n = static_cast<int>(x.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((x.row(i) - x.row(j)).squaredNorm() < c2) out.emplace_back(i, j);
  return out;
}

PairList cell_pairs(const Coordsd& x, double cutoff, const Vec2d& lower, const Vec2d& upper) {
  const int n = static_cast<int>(x.rows());
  const Vec2d lo = lower.array() - cutoff;
  const Vec2d extent = (upper - lower).array() + 2.0 * cutoff;
  const int ncx = std::max(1, static_cast<int>(extent.x() / cutoff));
  const int ncy = std::max(1, static_cast<int>(extent.y() / cutoff));

  auto cell_of = [&](int i, int a, int nc) {
    const double w = extent[a] / nc;
    const int c = static_cast<int>(std::floor((x(i, a) - lo[a]) / w));
    return std::clamp(c, 0, nc - 1);
  };

  std::vector<int> head(static_cast<std::size_t>(ncx) * ncy, -1);
  std::vector<int> next(n, -1);
  std::vector<int> cx(n), cy(n);
  for (int i = n - 1; i >= 0; --i) {
    cx[i] = cell_of(i, 0, ncx);
    cy[i] = cell_of(i, 1, ncy);
    const std::size_t c = static_cast<std::size_t>(cy[i]) * ncx + cx[i];
    next[i] = head[c];
    head[c] = i;
  }

  PairList out;
  const double c2 = cutoff * cutoff;
  for (int i = 0; i < n; ++i) {
    for (int dy = -1; dy <= 1; ++dy) {
      const int yy = cy[i] + dy;
      if (yy < 0 || yy >= ncy) continue;
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = cx[i] + dx;
        if (xx < 0 || xx >= ncx) continue;
        for (int j = head[static_cast<std::size_t>(yy) * ncx + xx]; j >= 0; j = next[j])
          if (j > i && (x.row(i) - x.row(j)).squaredNorm() < c2) out.emplace_back(i, j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PairList candidate_pairs(const Coordsd& x, double cutoff, NeighborSearch mode, const Vec2d& lower,
                         const Vec2d& upper) {
  return mode == NeighborSearch::all_pairs ? all_pairs(x, cutoff) : cell_pairs(x, cutoff, lower, upper);
}

// ---------------------------------------------------------------------------

ForceField::ForceField(const MaterialParams& params, const PackingGeometry& geometry,
                       const DampingParams& damping, NeighborSearch search, double skin)
    : params_(params), geometry_(geometry), damping_(damping), search_(search), skin_(skin) {}

double ForceField::pair_eps(int i, int j) const {
  return effective_stiffness(params_.stiffness[i], params_.stiffness[j]);
}

void ForceField::refresh(const Coordsd& x) {
  const double margin = 0.5 * skin_ * params_.diameter;
  if (reference_.rows() == x.rows()) {
    const double moved2 = (x - reference_).rowwise().squaredNorm().maxCoeff();
    if (moved2 < margin * margin) return;
  }
  pairs_ = candidate_pairs(x, params_.diameter * (1.0 + skin_), search_, geometry_.lower, geometry_.upper);
  reference_ = x;
}

const PairList& ForceField::pairs(const Coordsd& x) {
  refresh(x);
  return pairs_;
}

void ForceField::conservative(const Coordsd& x, Coordsd& force) {
  refresh(x);
  const double sigma = params_.diameter;
  const double alpha = params_.alpha;
  force.setZero(x.rows(), 2);
  for (const auto& [i, j] : pairs_) {
    const Vec2d d = x.row(i) - x.row(j);
    const double r = d.norm();
    if (!(r < sigma)) continue;
    if (r == 0.0) throw SimulationFailure("coincident particle centers", -1);
    const Vec2d f = pair_force_magnitude(r, sigma, pair_eps(i, j), alpha) / r * d;
    force.row(i) += f;
    force.row(j) -= f;
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vec2d ri = x.row(i);
    force.row(i) += wall_force(ri, geometry_.lower, geometry_.upper, sigma, params_.stiffness[i], alpha);
  }
}

void ForceField::contact_dashpots(const Coordsd& x, const Coordsd& v, Coordsd& force) {
  force.setZero(x.rows(), 2);
  const double sigma = params_.diameter;
  if (damping_.particle_particle > 0.0) {
    refresh(x);
    for (const auto& [i, j] : pairs_) {
      if (!((x.row(i) - x.row(j)).norm() < sigma)) continue;
      const Vec2d f = damping_.particle_particle * (v.row(i) - v.row(j));
      force.row(i) += f;
      force.row(j) -= f;
    }
  }
  if (damping_.particle_wall > 0.0) {
    const double s = 0.5 * sigma;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int walls = 0;
      for (int a = 0; a < 2; ++a) {
        walls += (x(i, a) - geometry_.lower[a]) < s;
        walls += (geometry_.upper[a] - x(i, a)) < s;
      }
      force.row(i) += damping_.particle_wall * walls * v.row(i);
    }
  }
}

double ForceField::potential(const Coordsd& x) {
  refresh(x);
  const double sigma = params_.diameter;
  const double alpha = params_.alpha;
  double e = 0.0;
  for (const auto& [i, j] : pairs_)
    e += pair_potential((x.row(i) - x.row(j)).norm(), sigma, pair_eps(i, j), alpha);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vec2d ri = x.row(i);
    e += wall_potential(ri, geometry_.lower, geometry_.upper, sigma, params_.stiffness[i], alpha);
  }
  return e;
}

void ForceField::conservative_vjp(const Coordsd& x, const Coordsd& fbar, Coordsd& xbar, Eigen::VectorXd& kbar) {
  refresh(x);
  const double sigma = params_.diameter;
  const double alpha = params_.alpha;
  const auto& k = params_.stiffness;
  for (const auto& [i, j] : pairs_) {
    const Vec2d d = x.row(i) - x.row(j);
    const double r = d.norm();
    if (!(r < sigma)) continue;
    const double eps = pair_eps(i, j);
    const Vec2d u = d / r;
    const double f = pair_force_magnitude(r, sigma, eps, alpha);
    const double fp = pair_force_slope(r, sigma, eps, alpha);
    const Vec2d delta = fbar.row(i) - fbar.row(j);
    // dF_i/dx_i = f' u u^T + (f/r)(I - u u^T), symmetric
    const double ud = u.dot(delta);
    const Vec2d jv = (fp - f / r) * ud * u + (f / r) * delta;
    xbar.row(i) += jv;
    xbar.row(j) -= jv;
    const auto [dki, dkj] = effective_stiffness_partials(k[i], k[j]);
    const double sens = delta.dot(u) * f / eps;
    kbar[i] += sens * dki;
    kbar[j] += sens * dkj;
  }
  const double s = 0.5 * sigma;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int a = 0; a < 2; ++a) {
      const double g_lo = x(i, a) - geometry_.lower[a];
      const double g_hi = geometry_.upper[a] - x(i, a);
      if (g_lo < s) {
        xbar(i, a) += pair_force_slope(g_lo, s, k[i], alpha) * fbar(i, a);
        kbar[i] += fbar(i, a) * pair_force_magnitude(g_lo, s, 1.0, alpha);
      }
      if (g_hi < s) {
        xbar(i, a) += pair_force_slope(g_hi, s, k[i], alpha) * fbar(i, a);
        kbar[i] -= fbar(i, a) * pair_force_magnitude(g_hi, s, 1.0, alpha);
      }
    }
  }
}

void ForceField::dashpot_vjp(const Coordsd& x, const Coordsd& fbar, Coordsd& vbar) {
  const double sigma = params_.diameter;
  if (damping_.particle_particle > 0.0) {
    refresh(x);
    for (const auto& [i, j] : pairs_) {
      if (!((x.row(i) - x.row(j)).norm() < sigma)) continue;
      const Vec2d delta = damping_.particle_particle * (fbar.row(i) - fbar.row(j));
      vbar.row(i) += delta;
      vbar.row(j) -= delta;
    }
  }
  if (damping_.particle_wall > 0.0) {
    const double s = 0.5 * sigma;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int walls = 0;
      for (int a = 0; a < 2; ++a) {
        walls += (x(i, a) - geometry_.lower[a]) < s;
        walls += (geometry_.upper[a] - x(i, a)) < s;
      }
      vbar.row(i) += damping_.particle_wall * walls * fbar.row(i);
    }
  }
}

int ForceField::contact_count(const Coordsd& x, int particle) {
  refresh(x);
  int n = 0;
  for (const auto& [i, j] : pairs_)
    if ((i == particle || j == particle) && (x.row(i) - x.row(j)).norm() < params_.diameter) ++n;
  return n;
}

// ---------------------------------------------------------------------------

Coordsd total_forces(const ParticleState& state, const MaterialParams& params, const PackingGeometry& geometry,
                     const DampingParams& damping, const Coordsd* external, NeighborSearch search) {
  if (!state.finite()) throw SimulationFailure("non-finite state passed to total_forces", -1);
  ForceField field(params, geometry, damping, search);
  Coordsd f, dash;
  field.conservative(state.positions, f);
  field.contact_dashpots(state.positions, state.velocities, dash);
  f -= dash;
  f -= damping.background * state.velocities;
  if (external) f += *external;
  Coordsd acc = f / params.mass;
  if (!acc.allFinite()) throw SimulationFailure("non-finite acceleration", -1);
  return acc;
}

EnergyBreakdown total_energy(const ParticleState& state, const MaterialParams& params,
                             const PackingGeometry& geometry) {
  ForceField field(params, geometry, DampingParams{0.0, 0.0, 0.0}, NeighborSearch::all_pairs);
  EnergyBreakdown e;
  e.kinetic = 0.5 * params.mass * state.velocities.squaredNorm();
  e.potential = field.potential(state.positions);
  return e;
}

}  // namespace grain
