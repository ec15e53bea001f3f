#include "grain/sim.hpp"

#include "grain/packing.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace grain {

double DriveSignal::omega() const { return 2.0 * std::numbers::pi * frequency; }

double DriveSignal::displacement(double t) const { return amplitude * std::sin(omega() * t + phase); }

double DriveSignal::velocity(double t) const { return amplitude * omega() * std::cos(omega() * t + phase); }

void DriveSignal::validate(Eigen::Index n) const {
  if (particle < 0 || particle >= n) throw ConfigError("drive particle index out of range");
  if (!(amplitude >= 0.0)) throw ConfigError("drive amplitude must be non-negative");
  if (!(frequency > 0.0)) throw ConfigError("drive frequency must be positive");
}

void SimConfig::validate() const {
  if (n_steps <= 0) throw ConfigError("n_steps must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (record_stride <= 0) throw ConfigError("record_stride must be positive");
  damping.validate();
}

long SimConfig::n_records() const { return (n_steps + record_stride - 1) / record_stride; }

// ---------------------------------------------------------------------------

Integrator::Integrator(const MaterialParams& params, const PackingGeometry& geometry, const SimConfig& config,
                       std::span<const DriveSignal> drives)
    : params_(params),
      geometry_(geometry),
      config_(config),
      drives_(drives.begin(), drives.end()),
      field_(params, geometry, config.damping, config.search) {
  config_.validate();
  params_.validate();
  if (params_.size() != geometry_.size()) throw ConfigError("stiffness vector does not match particle count");
  free_ = Coordsd::Ones(geometry_.size(), 2);
  for (const auto& d : drives_) {
    d.validate(geometry_.size());
    double& slot = free_(d.particle, axis_index(d.axis));
    if (slot == 0.0) throw ConfigError("a coordinate is driven twice");
    slot = 0.0;
  }
}

ParticleState Integrator::initial_state() {
  ParticleState s = ParticleState::at_rest(geometry_.equilibrium);
  field_.conservative(s.positions, force_);
  s.accelerations = force_.cwiseProduct(free_) / params_.mass;
  return s;
}

void Integrator::apply_drives(Coordsd& x, Coordsd& v_half, double t_half, double t_next) const {
  for (const auto& d : drives_) {
    const int a = axis_index(d.axis);
    x(d.particle, a) = geometry_.equilibrium(d.particle, a) + d.displacement(t_next);
    v_half(d.particle, a) = d.velocity(t_half);
  }
}

void Integrator::step(ParticleState& s, long step) {
  const double dt = config_.dt;
  const double h = 0.5 * dt;
  const double b = config_.damping.background / params_.mass;
  const double c = 1.0 / (1.0 + h * b);
  const double t_half = (static_cast<double>(step) + 0.5) * dt;
  const double t_next = static_cast<double>(step + 1) * dt;

  Coordsd& x = s.positions;
  Coordsd& v = s.velocities;
  Coordsd& a = s.accelerations;

  v += h * a;  // v now holds the half-step velocity
  x += dt * v;
  apply_drives(x, v, t_half, t_next);
  if (!x.allFinite()) throw SimulationFailure("non-finite positions", step + 1);

  field_.conservative(x, force_);
  field_.contact_dashpots(x, v, dash_);
  a = (force_ - dash_) / params_.mass;  // G
  v = c * (v + h * a);
  a -= b * v;
  for (const auto& d : drives_) {
    const int ax = axis_index(d.axis);
    v(d.particle, ax) = d.velocity(t_next);
    a(d.particle, ax) = 0.0;
  }
  s.time = t_next;
  if (!v.allFinite() || !a.allFinite()) throw SimulationFailure("non-finite velocities", step + 1);
}

std::vector<ProbeRecord> run_sim(const SimConfig& config, const MaterialParams& params,
                                 const PackingGeometry& geometry, std::span<const DriveSignal> drives,
                                 std::span<const Probe> probes) {
  Integrator integ(params, geometry, config, drives);
  const long n_rec = config.n_records();
  std::vector<ProbeRecord> records;
  records.reserve(probes.size());
  for (const auto& p : probes) {
    if (p.particle < 0 || p.particle >= geometry.size()) throw ConfigError("probe particle index out of range");
    records.push_back({p, Eigen::VectorXd::Zero(n_rec)});
  }

  ParticleState s = integ.initial_state();
  for (long n = 0; n < config.n_steps; ++n) {
    integ.step(s, n);
    if (n % config.record_stride == 0) {
      const long j = n / config.record_stride;
      for (auto& r : records) {
        const int a = axis_index(r.probe.axis);
        r.series[j] = s.positions(r.probe.particle, a) - geometry.equilibrium(r.probe.particle, a);
      }
    }
  }
  return records;
}

Eigen::Index window_start(Eigen::Index length, double start_fraction) {
  if (!(start_fraction >= 0.0 && start_fraction <= 1.0)) throw DomainError("window fraction must lie in [0, 1]");
  // The small bias keeps exact thirds of round lengths on their integer.
  const auto start = static_cast<Eigen::Index>(std::floor(start_fraction * static_cast<double>(length) + 1e-9));
  return std::min(start, length);
}

double wave_intensity(const Eigen::Ref<const Eigen::VectorXd>& series, double start_fraction) {
  const Eigen::Index start = window_start(series.size(), start_fraction);
  if (start >= series.size()) throw DomainError("wave intensity window is empty");
  return series.tail(series.size() - start).squaredNorm();
}

double wave_intensity(const ProbeRecord& record, double start_fraction) {
  return wave_intensity(record.series, start_fraction);
}

void write_trajectory_csv(std::ostream& out, const SimConfig& config, std::span<const ProbeRecord> records) {
  out << "step,time";
  for (const auto& r : records) out << ",p" << r.probe.particle << '_' << axis_name(r.probe.axis);
  out << '\n';
  const long n_rec = records.empty() ? config.n_records() : static_cast<long>(records.front().series.size());
  for (long j = 0; j < n_rec; ++j) {
    out << config.record_step(j) << ',' << format_double(config.record_time(j));
    for (const auto& r : records) out << ',' << format_double(r.series[j]);
    out << '\n';
  }
}

}  // namespace grain
