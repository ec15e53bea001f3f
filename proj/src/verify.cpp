#include "grain/verify.hpp"

#include "grain/losses.hpp"
#include "grain/packing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace grain {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// Total potential in extended precision, summed over every pair and wall with
// coordinate (moved, axis) shifted by dx.
long double potential_ld(const Coordsd& x, const MaterialParams& p, const PackingGeometry& g, Eigen::Index moved,
                         int axis, long double dx) {
  using LD = long double;
  const auto pos = [&](Eigen::Index i) {
    Vec2<LD> r(x(i, 0), x(i, 1));
    if (i == moved) r[axis] += dx;
    return r;
  };
  const Vec2<LD> lo = g.lower.cast<LD>(), hi = g.upper.cast<LD>();
  const LD sigma = p.diameter, alpha = p.alpha;
  LD v = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vec2<LD> ri = pos(i);
    v += wall_potential<LD>(ri, lo, hi, sigma, p.stiffness(i), alpha);
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const LD eps = effective_stiffness<LD>(p.stiffness(i), p.stiffness(j));
      v += pair_potential<LD>((ri - pos(j)).norm(), sigma, eps, alpha);
    }
  }
  return v;
}

}  // namespace

ForceFunction reference_force() {
  return [](const Coordsd& x, const MaterialParams& params, const PackingGeometry& geometry, Coordsd& out) {
    ForceField field(params, geometry, DampingParams{0.0, 0.0, 0.0}, NeighborSearch::all_pairs);
    field.conservative(x, out);
  };
}

RandomConfiguration random_contact_configuration(Rng& rng, int n) {
  RandomConfiguration c;
  const double sigma = 0.1;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::uniform_real_distribution<double> jitter(-0.02 * sigma, 0.02 * sigma);
  std::uniform_real_distribution<double> spacing_dist(0.88, 0.95);
  const double a = spacing_dist(rng) * sigma;
  c.positions.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const int row = i / cols, col = i % cols;
    c.positions(i, 0) = (col + 0.5 * (row % 2)) * a + jitter(rng);
    c.positions(i, 1) = row * a * std::sqrt(3.0) / 2.0 + jitter(rng);
  }
  // walls a little inside half a diameter from the outermost centers
  const Vec2d lo = c.positions.colwise().minCoeff().transpose();
  const Vec2d hi = c.positions.colwise().maxCoeff().transpose();
  c.geometry.lower = lo - Vec2d::Constant(0.47 * sigma);
  c.geometry.upper = hi + Vec2d::Constant(0.47 * sigma);
  c.geometry.nx = n;
  c.geometry.ny = 1;
  c.geometry.equilibrium = c.positions;
  c.params = MaterialParams::uniform(n, 1.0);
  c.params.stiffness = uniform_stiffness(rng, n, MaterialParams::k_min, MaterialParams::k_max);
  return c;
}

CheckResult check_force_fd(int configs, std::uint64_t seed, const ForceFunction& force, double tol) {
  const ForceFunction eval = force ? force : reference_force();
  Rng rng = make_stream(seed, "force-fd");
  std::uniform_int_distribution<int> size(2, 20);
  double worst = 0.0;
  long components = 0;
  for (int c = 0; c < configs; ++c) {
    RandomConfiguration cfg = random_contact_configuration(rng, size(rng));
    Coordsd f(cfg.positions.rows(), 2);
    eval(cfg.positions, cfg.params, cfg.geometry, f);
    const double scale = f.rowwise().norm().maxCoeff();
    const double h = 1e-7 * cfg.params.diameter;
    const Coordsd& x = cfg.positions;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (int a = 0; a < 2; ++a) {
        const long double up = potential_ld(x, cfg.params, cfg.geometry, i, a, h);
        const long double down = potential_ld(x, cfg.params, cfg.geometry, i, a, -h);
        const double numeric = static_cast<double>(-(up - down) / (2.0L * h));
        const double denom = std::max({std::abs(f(i, a)), std::abs(numeric), 1e-6 * scale, 1e-300});
        worst = std::max(worst, std::abs(f(i, a) - numeric) / denom);
        ++components;
      }
  }
  CheckResult r{"force_fd", worst < tol, worst, tol, ""};
  r.detail = std::to_string(configs) + " configurations, " + std::to_string(components) + " components";
  return r;
}

ConservationSetup conservation_setup(std::uint64_t seed) {
  ConservationSetup s;
  const LatticeSpec spec{3, 3, 0.1, 0.82};
  s.params = MaterialParams::uniform(9, 5.0);
  s.geometry = generate_packing(spec, s.params, FireConfig{});
  Rng rng = make_stream(seed, "conservation");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  s.start = s.geometry.equilibrium;
  for (Eigen::Index i = 0; i < s.start.rows(); ++i)
    for (int a = 0; a < 2; ++a) s.start(i, a) += 0.01 * s.params.diameter * u(rng);
  return s;
}

namespace {

SimConfig undamped(double dt, long n_steps) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.n_steps = n_steps;
  cfg.damping = DampingParams{0.0, 0.0, 0.0};
  cfg.search = NeighborSearch::all_pairs;
  return cfg;
}

ParticleState start_state(Integrator& integ, const Coordsd& x) {
  ParticleState s = ParticleState::at_rest(x);
  Coordsd f(x.rows(), 2);
  integ.field().conservative(x, f);
  s.accelerations = f / integ.params().mass;
  return s;
}

Coordsd final_positions(const ConservationSetup& setup, double dt, long n_steps) {
  Integrator integ(setup.params, setup.geometry, undamped(dt, n_steps), {});
  ParticleState s = start_state(integ, setup.start);
  for (long n = 0; n < n_steps; ++n) integ.step(s, n);
  return s.positions;
}

}  // namespace

double energy_drift(const ConservationSetup& setup, double dt, long n_steps) {
  Integrator integ(setup.params, setup.geometry, undamped(dt, n_steps), {});
  ParticleState s = start_state(integ, setup.start);
  const double e0 = total_energy(s, setup.params, setup.geometry).total();
  double peak = 0.0;
  for (long n = 0; n < n_steps; ++n) {
    integ.step(s, n);
    peak = std::max(peak, std::abs(total_energy(s, setup.params, setup.geometry).total() - e0));
  }
  return peak / e0;
}

CheckResult check_energy_conservation(double dt, long n_steps, double tol) {
  const ConservationSetup setup = conservation_setup();
  const double coarse = energy_drift(setup, dt, n_steps);
  const double fine = energy_drift(setup, 0.5 * dt, 2 * n_steps);
  const double ratio = coarse / fine;
  CheckResult r{"energy_conservation", coarse < tol && ratio >= 3.0 && ratio <= 5.0, coarse, tol, ""};
  r.detail = "drift(dt)/drift(dt/2) = " + fmt(ratio) + " (want 3..5)";
  return r;
}

CheckResult check_integrator_order(std::vector<double> dts, double t_end) {
  const ConservationSetup setup = conservation_setup();
  const double dt_ref = *std::min_element(dts.begin(), dts.end()) / 16.0;
  const Coordsd ref = final_positions(setup, dt_ref, std::lround(t_end / dt_ref));
  std::vector<double> lx, ly;
  std::string errs;
  for (double dt : dts) {
    const double err = (final_positions(setup, dt, std::lround(t_end / dt)) - ref).norm();
    lx.push_back(std::log(dt));
    ly.push_back(std::log(err));
    errs += (errs.empty() ? "" : ", ") + fmt(err);
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  CheckResult r{"integrator_order", std::abs(slope - 2.0) <= 0.2, slope, 0.2, ""};
  r.detail = "errors " + errs + "; |slope - 2| <= 0.2";
  return r;
}

CheckResult check_fire_two_body() {
  PackingGeometry g;
  g.lower = Vec2d(0.0, 0.0);
  g.upper = Vec2d(1.0, 1.0);
  g.nx = 2;
  g.ny = 1;
  g.equilibrium.resize(2, 2);
  g.equilibrium << 0.4505, 0.5, 0.5495, 0.5;  // 1% overlap
  MaterialParams p = MaterialParams::uniform(2, 5.0);
  p.stiffness << 3.0, 8.0;
  const FireResult res = fire_minimize(ParticleState::at_rest(g.equilibrium), p, g, FireConfig{});
  const double sep = (res.state.positions.row(0) - res.state.positions.row(1)).norm();
  // any separation >= sigma is force free, so FIRE stops on the first step
  // that leaves contact; the overshoot is bounded by that last step
  const double err = (sep - p.diameter) / p.diameter;
  const bool ok = err >= -1e-6 && err < 2e-3 && res.residual < 1e-10;
  CheckResult r{"fire_two_body", ok, err, 2e-3, ""};
  r.detail = "(separation - sigma) / sigma in [-1e-6, 2e-3), residual " + fmt(res.residual);
  return r;
}

ChainSetup chain_setup(long n_steps) {
  ChainSetup c;
  c.geometry.lower = Vec2d(0.0, 0.0);
  c.geometry.upper = Vec2d(0.18, 0.098);
  c.geometry.nx = 2;
  c.geometry.ny = 1;
  Coordsd x(2, 2);
  x << 0.048, 0.049, 0.135, 0.049;
  c.params = MaterialParams::uniform(2, 5.0);
  c.params.stiffness << 3.0, 7.0;
  c.geometry.equilibrium = fire_minimize(ParticleState::at_rest(x), c.params, c.geometry, FireConfig{}).state.positions;
  c.sim.n_steps = n_steps;
  c.sim.search = NeighborSearch::all_pairs;

  Sample s;
  s.label = "chain";
  s.drives.push_back({0, 1e-3, 15.0, Axis::x, 0.0});
  s.probes.push_back({1, Axis::x});
  c.experiment.samples.push_back(s);
  Eigen::VectorXd target(c.sim.n_records());
  for (long j = 0; j < target.size(); ++j)
    target[j] = 0.5e-3 * std::sin(2.0 * std::numbers::pi * 15.0 * c.sim.record_time(j));
  c.experiment.loss = [target](const std::vector<ProbeSeries>& all) {
    LossEvaluation ev;
    const Eigen::VectorXd& y = all[0][0].series;
    ev.value = mae_loss(y, target);
    ev.partials.emplace_back("chain", ev.value);
    ev.series_grad.push_back({mae_grad(y, target)});
    return ev;
  };
  return c;
}

CheckResult check_adjoint_chain(long n_steps, double h, double tol) {
  const ChainSetup c = chain_setup(n_steps);
  const std::vector<int> idx{0, 1};
  const double err = grad_check(c.experiment, c.params, c.geometry, c.sim, h, idx);
  CheckResult r{"adjoint_chain", err < tol, err, tol, ""};
  r.detail = "2 particles, " + std::to_string(n_steps) + " steps, h = " + fmt(h);
  return r;
}

CheckResult check_adjoint_lattice(int nx, int ny, double phi, long n_steps, std::uint64_t seed, double h, double tol,
                                  int components) {
  const LatticeSpec spec{nx, ny, 0.1, phi};
  MaterialParams params = MaterialParams::uniform(nx * ny, 5.5);
  const PackingGeometry g = generate_packing(spec, params, FireConfig{});
  Rng rng = make_stream(seed, "adjoint-check");
  params.stiffness = uniform_stiffness(rng, params.size(), MaterialParams::k_min, MaterialParams::k_max);
  ExperimentSpec es = default_spec(TaskKind::and_gate);
  assign_default_ports(es, g);
  SimConfig sim;
  sim.n_steps = n_steps;
  const Experiment ex = make_experiment(es, g, sim);

  std::vector<int> idx(static_cast<std::size_t>(params.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  if (components > 0 && static_cast<std::size_t>(components) < idx.size()) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(components));
    std::sort(idx.begin(), idx.end());
  }
  const double err = grad_check(ex, params, g, sim, h, idx);
  CheckResult r{"adjoint_lattice", err < tol, err, tol, ""};
  r.detail = std::to_string(nx) + "x" + std::to_string(ny) + ", " + std::to_string(n_steps) + " steps, " +
             std::to_string(idx.size()) + " components";
  return r;
}

CheckResult check_loss_identities() {
  std::vector<std::string> failures;
  const auto expect = [&](const std::string& what, double got, double want, double rel) {
    const double err = std::abs(got - want) / std::max(std::abs(want), 1e-300);
    if (!(want == 0.0 ? std::abs(got) < 1e-12 : err < rel)) failures.push_back(what + " = " + fmt(got));
  };
  {
    const std::vector<Eigen::Vector2d> y{{0.5, 0.5}}, t{{1.0, 0.0}};
    expect("ce(0.5,0.5)", cross_entropy_loss(y, t), std::log(2.0), 1e-12);
    const std::vector<Eigen::Vector2d> y2{{1.0, 0.0}};
    expect("ce(1,0)", cross_entropy_loss(y2, t), std::log1p(std::exp(-1.0)), 1e-12);
  }
  {
    const double A = 1e-3, f = 15.0, dt = 5e-3;
    const long n = 3000;
    Eigen::VectorXd s(n);
    for (long i = 0; i < n; ++i) s[i] = A * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i + 1) * dt);
    expect("mae(sin, 0)", mae_loss(Eigen::VectorXd::Zero(n), s), 2.0 * A / std::numbers::pi, 1e-2);
    expect("mae(y, y)", mae_loss(s, s), 0.0, 0.0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    for (double c : {0.0, 0.5, 1.0}) expect("gain c=" + fmt(c), spectral_gain(s, zero, c * s, f, dt), c, 1e-2);
    expect("gain half-sum", spectral_gain(s, s, 0.5 * (s + s), f, dt), 0.5, 1e-2);
  }
  CheckResult r{"loss_identities", failures.empty(), static_cast<double>(failures.size()), 0.0, ""};
  for (const auto& f : failures) r.detail += (r.detail.empty() ? "" : "; ") + f;
  if (r.detail.empty()) r.detail = "cross-entropy, MAE and gain identities";
  return r;
}

std::vector<CheckResult> run_verification_suite(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(check_force_fd(25, options.seed, options.force));
  out.push_back(check_energy_conservation(5e-3, 4000));
  out.push_back(check_integrator_order());
  out.push_back(check_fire_two_body());
  out.push_back(check_adjoint_chain());
  out.push_back(check_adjoint_lattice(4, 4, 0.86, 100, options.seed, 1e-6, 1e-4, 6));
  out.push_back(check_loss_identities());
  return out;
}

}  // namespace grain
