#pragma once

#include "grain/physics.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace grain {

/// Kinematic harmonic input: the particle's coordinate on `axis` is held at
/// delta_0 + A sin(2 pi f t + phase).
struct DriveSignal {
  int particle = 0;
  double amplitude = 1e-3;
  double frequency = 15.0;
  Axis axis = Axis::x;
  double phase = 0.0;

  double omega() const;
  double displacement(double t) const;
  double velocity(double t) const;
  void validate(Eigen::Index n) const;
};

struct Probe {
  int particle = 0;
  Axis axis = Axis::x;
  bool operator==(const Probe&) const = default;
};

struct SimConfig {
  long n_steps = 3000;
  double dt = 5e-3;
  DampingParams damping;
  long record_stride = 1;
  NeighborSearch search = NeighborSearch::cell_list;

  void validate() const;
  /// ceil(n_steps / record_stride); record j holds the state after step 1 + j * stride.
  long n_records() const;
  long record_step(long j) const { return 1 + j * record_stride; }
  double record_time(long j) const { return static_cast<double>(record_step(j)) * dt; }
};

/// Displacement from equilibrium of one coordinate, one entry per recorded step.
struct ProbeRecord {
  Probe probe;
  Eigen::VectorXd series;
};

/// Velocity Verlet for the driven, damped crystal. The state also carries the
/// acceleration of the previous force evaluation so each step costs one force
/// call. Background drag enters the closing half-kick implicitly (trapezoidal),
/// contact dashpots are evaluated at the half-step velocity.
class Integrator {
 public:
  Integrator(const MaterialParams& params, const PackingGeometry& geometry, const SimConfig& config,
             std::span<const DriveSignal> drives);

  /// delta_0 with zero velocity and its acceleration.
  ParticleState initial_state();
  /// Advances `state` from step index `step` to `step + 1`.
  void step(ParticleState& state, long step);

  ForceField& field() { return field_; }
  const SimConfig& config() const { return config_; }
  const MaterialParams& params() const { return params_; }
  const PackingGeometry& geometry() const { return geometry_; }
  /// 1 on free coordinates, 0 on kinematically driven ones.
  const Coordsd& free_mask() const { return free_; }

 private:
  void apply_drives(Coordsd& x, Coordsd& v_half, double t_half, double t_next) const;

  const MaterialParams& params_;
  const PackingGeometry& geometry_;
  SimConfig config_;
  std::vector<DriveSignal> drives_;
  ForceField field_;
  Coordsd free_;
  Coordsd force_, dash_;
};

/// Integrates n_steps from (delta_0, 0) and records the probes.
std::vector<ProbeRecord> run_sim(const SimConfig& config, const MaterialParams& params,
                                 const PackingGeometry& geometry, std::span<const DriveSignal> drives,
                                 std::span<const Probe> probes);

/// First index of the window that starts at `start_fraction` of a series.
Eigen::Index window_start(Eigen::Index length, double start_fraction);

/// Sum of squared displacements over [start_fraction * T, T].
double wave_intensity(const ProbeRecord& record, double start_fraction);
double wave_intensity(const Eigen::Ref<const Eigen::VectorXd>& series, double start_fraction);

/// CSV with columns step,time,p<i>_<axis>,...
void write_trajectory_csv(std::ostream& out, const SimConfig& config, std::span<const ProbeRecord> records);

}  // namespace grain
