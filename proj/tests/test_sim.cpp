#include "grain/packing.hpp"
#include "grain/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace grain;

namespace {

PackingGeometry lone_particle() {
  PackingGeometry g;
  g.upper = Vec2d(10, 10);
  g.nx = 1;
  g.ny = 1;
  g.equilibrium.resize(1, 2);
  g.equilibrium << 5.0, 5.0;
  return g;
}

PackingGeometry jammed(int nx, int ny, double phi, const MaterialParams& params) {
  return generate_packing(LatticeSpec{nx, ny, 0.1, phi}, params, FireConfig{});
}

}  // namespace

TEST_CASE("damped free particle decays exponentially") {
  const PackingGeometry g = lone_particle();
  const auto params = MaterialParams::uniform(1, 5.0);
  SimConfig cfg;
  cfg.n_steps = 400;
  cfg.dt = 5e-3;
  Integrator integ(params, g, cfg, {});
  ParticleState s = integ.initial_state();
  s.velocities << 0.2, 0.0;
  s.accelerations << -0.2, 0.0;
  for (long n = 0; n < cfg.n_steps; ++n) integ.step(s, n);
  const double t = cfg.n_steps * cfg.dt;
  CHECK(s.velocities(0, 0) == doctest::Approx(0.2 * std::exp(-t)).epsilon(1e-4));
  CHECK(std::abs(s.positions(0, 0) - (5.0 + 0.2 * (1.0 - std::exp(-t)))) < 1e-5);
}

TEST_CASE("equilibrium is a fixed point without drives") {
  const auto params = MaterialParams::uniform(16, 5.0);
  const PackingGeometry g = jammed(4, 4, 0.85, params);
  SimConfig cfg;
  cfg.n_steps = 200;
  Integrator integ(params, g, cfg, {});
  ParticleState s = integ.initial_state();
  for (long n = 0; n < cfg.n_steps; ++n) integ.step(s, n);
  CHECK((s.positions - g.equilibrium).cwiseAbs().maxCoeff() < 1e-10 * cfg.dt * cfg.dt * 100);
}

TEST_CASE("no drives gives silent probes") {
  const auto params = MaterialParams::uniform(25, 5.0);
  const PackingGeometry g = jammed(5, 5, 0.86, params);
  SimConfig cfg;
  cfg.n_steps = 300;
  const std::vector<Probe> probes{{12, Axis::x}, {24, Axis::y}};
  const auto rec = run_sim(cfg, params, g, {}, probes);
  REQUIRE(rec.size() == 2);
  CHECK(rec[0].series.size() == 300);
  CHECK(rec[0].series.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rec[1].series.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("driven particle follows its prescribed motion") {
  const auto params = MaterialParams::uniform(25, 5.0);
  const PackingGeometry g = jammed(5, 5, 0.86, params);
  SimConfig cfg;
  cfg.n_steps = 250;
  cfg.record_stride = 3;
  DriveSignal d;
  d.particle = 10;
  d.amplitude = 1e-3;
  d.frequency = 7.0;
  const std::vector<DriveSignal> drives{d};
  const std::vector<Probe> probes{{10, Axis::x}, {10, Axis::y}};
  const auto rec = run_sim(cfg, params, g, drives, probes);
  CHECK(rec[0].series.size() == cfg.n_records());
  for (long j = 0; j < cfg.n_records(); ++j) {
    CHECK(rec[0].series(j) == doctest::Approx(d.displacement(cfg.record_time(j))).epsilon(1e-9));
    CHECK(std::abs(rec[1].series(j)) < 1e-15);
  }
  CHECK(d.displacement(0.25 / 7.0) == doctest::Approx(1e-3));
}

TEST_CASE("record bookkeeping") {
  SimConfig cfg;
  cfg.n_steps = 10;
  cfg.record_stride = 3;
  CHECK(cfg.n_records() == 4);
  CHECK(cfg.record_step(0) == 1);
  CHECK(cfg.record_step(3) == 10);
  cfg.record_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.record_stride = 1;
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("wave intensity") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(90);
  CHECK(wave_intensity(zero, 1.0 / 3.0) == 0.0);

  Eigen::VectorXd c = Eigen::VectorXd::Constant(90, 0.5);
  const auto w = 90 - window_start(90, 1.0 / 3.0);
  CHECK(w == 60);
  CHECK(wave_intensity(c, 1.0 / 3.0) == doctest::Approx(w * 0.25));

  const int n = 3000;
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = 2e-3 * std::sin(2 * std::numbers::pi * 15.0 * i * 5e-3 + 0.3);
  const auto ws = n - window_start(n, 2.0 / 3.0);
  CHECK(wave_intensity(s, 2.0 / 3.0) == doctest::Approx(ws * 4e-6 / 2).epsilon(2.0 / ws));

  CHECK_THROWS(wave_intensity(Eigen::VectorXd(), 0.5));
}

TEST_CASE("simulation rejects a drive on a missing particle") {
  const PackingGeometry g = lone_particle();
  const auto params = MaterialParams::uniform(1, 5.0);
  DriveSignal d;
  d.particle = 3;
  const std::vector<DriveSignal> drives{d};
  CHECK_THROWS(run_sim(SimConfig{}, params, g, drives, {}));
}

TEST_CASE("trajectory csv has one row per record") {
  const PackingGeometry g = lone_particle();
  const auto params = MaterialParams::uniform(1, 5.0);
  SimConfig cfg;
  cfg.n_steps = 5;
  const std::vector<Probe> probes{{0, Axis::x}};
  const auto rec = run_sim(cfg, params, g, {}, probes);
  std::ostringstream os;
  write_trajectory_csv(os, cfg, rec);
  std::istringstream is(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 6);
}
