#pragma once

#include "grain/physics.hpp"

#include <iosfwd>
#include <string>

namespace grain {

/// Hexagonal close-packing bound in two dimensions, pi / (2 sqrt 3).
inline constexpr double kHexagonalClosePacking = 0.9068996821171089;

struct LatticeSpec {
  int nx = 10;
  int ny = 11;
  double diameter = 0.1;
  double packing_fraction = 0.1;

  void validate() const;
};

struct FireConfig {
  double dt_initial = 5e-3;
  double dt_max = 5e-2;
  double f_inc = 1.1;
  double f_dec = 0.5;
  double alpha_start = 0.1;
  double f_alpha = 0.99;
  int n_min = 5;
  double force_tol = 1e-10;
  long max_steps = 2'000'000;

  void validate() const;
};

struct FireResult {
  ParticleState state;
  long iterations = 0;
  double residual = 0.0;  // max per-particle |F|
};

/// Ratio of total particle area to box area.
double packing_fraction(Eigen::Index n, double diameter, const PackingGeometry& geometry);

/// Triangular lattice with every other row shifted by half a spacing. The
/// spacing is chosen so that the particle/box area ratio equals the requested
/// packing fraction; lower-left wall at the origin.
PackingGeometry hexagonal_lattice(const LatticeSpec& spec);

/// Largest per-particle conservative force magnitude.
double max_force(ForceField& field, const Coordsd& x);

/// FIRE relaxation of the conservative forces. Walls stay fixed.
FireResult fire_minimize(const ParticleState& state, const MaterialParams& params, const PackingGeometry& geometry,
                         const FireConfig& config, NeighborSearch search = NeighborSearch::cell_list);

struct CompressionConfig {
  double step = 0.01;  // relative diameter change per outer step
  int max_outer = 400;
};

struct CompressionReport {
  int outer_steps = 0;
  long fire_iterations = 0;
  double residual = 0.0;
  double packing_fraction = 0.0;
};

/// Grows the particles from a contact-free diameter to the one consistent with
/// target_phi in multiplicative steps, relaxing with FIRE after every step, and
/// returns the geometry rescaled so the particles have params.diameter. The
/// equilibrium rows of the result are delta_0.
PackingGeometry compression_protocol(const PackingGeometry& geometry, const MaterialParams& params,
                                     double target_phi, const FireConfig& fire,
                                     const CompressionConfig& compression = {},
                                     CompressionReport* report = nullptr);

/// Lattice placement followed by the compression protocol.
PackingGeometry generate_packing(const LatticeSpec& spec, const MaterialParams& params, const FireConfig& fire,
                                 CompressionReport* report = nullptr, const CompressionConfig& compression = {});

/// Number of particle-particle contacts of each particle.
Eigen::VectorXi contact_numbers(const Coordsd& x, const MaterialParams& params, const PackingGeometry& geometry);

// ---------------------------------------------------------------------------
// Snapshot files: a header with N, lattice, box, phi and sigma, then one line
// per particle "index x y k". Numbers use the shortest round-trip form.

struct PackingSnapshot {
  PackingGeometry geometry;
  double diameter = 0.1;
  double packing_fraction = 0.0;
  Eigen::VectorXd stiffness;
};

void write_snapshot(std::ostream& out, const PackingSnapshot& snap);
void write_snapshot(const std::string& path, const PackingSnapshot& snap);
PackingSnapshot read_snapshot(std::istream& in);
PackingSnapshot read_snapshot(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace grain
