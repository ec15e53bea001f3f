#include "grain/adjoint.hpp"

#include <algorithm>
#include <cmath>

namespace grain {

Tape::Tape(long n_steps, long stride) : n_steps_(n_steps), stride_(stride) {
  if (stride_ <= 0) throw ConfigError("checkpoint stride must be positive");
  checkpoints_.reserve(static_cast<std::size_t>((n_steps_ + stride_ - 1) / stride_));
}

long Tape::default_stride(long n_steps) {
  return std::max(1L, static_cast<long>(std::ceil(std::sqrt(static_cast<double>(n_steps)))));
}

namespace {

void store_probes(const ParticleState& s, const PackingGeometry& g, long j, ProbeSeries& records) {
  for (auto& r : records) {
    const int a = axis_index(r.probe.axis);
    r.series[j] = s.positions(r.probe.particle, a) - g.equilibrium(r.probe.particle, a);
  }
}

}  // namespace

ProbeSeries record_forward(Integrator& integ, std::span<const Probe> probes, Tape& tape) {
  const SimConfig& cfg = integ.config();
  const PackingGeometry& g = integ.geometry();
  ProbeSeries records;
  for (const auto& p : probes) {
    if (p.particle < 0 || p.particle >= g.size()) throw ConfigError("probe particle index out of range");
    records.push_back({p, Eigen::VectorXd::Zero(cfg.n_records())});
  }
  ParticleState s = integ.initial_state();
  for (long n = 0; n < cfg.n_steps; ++n) {
    if (n % tape.stride() == 0) tape.push(s);
    integ.step(s, n);
    if (n % cfg.record_stride == 0) store_probes(s, g, n / cfg.record_stride, records);
  }
  return records;
}

Eigen::VectorXd backward(Integrator& integ, std::span<const Probe> probes, const Tape& tape,
                         const std::vector<Eigen::VectorXd>& series_grad) {
  const SimConfig& cfg = integ.config();
  const MaterialParams& params = integ.params();
  const Coordsd& free = integ.free_mask();
  ForceField& field = integ.field();
  const Eigen::Index n = params.size();
  const double dt = cfg.dt;
  const double h = 0.5 * dt;
  const double b = cfg.damping.background / params.mass;
  const double c = 1.0 / (1.0 + h * b);
  const double inv_m = 1.0 / params.mass;

  if (series_grad.size() != probes.size()) throw ConfigError("loss gradient does not match probe count");

  Eigen::VectorXd kbar = Eigen::VectorXd::Zero(n);
  Coordsd xb = Coordsd::Zero(n, 2), vb = Coordsd::Zero(n, 2), ab = Coordsd::Zero(n, 2);
  Coordsd fb(n, 2), vhb(n, 2);
  std::vector<Coordsd> positions;

  for (long seg = tape.segments() - 1; seg >= 0; --seg) {
    const long s0 = seg * tape.stride();
    const long s1 = std::min(s0 + tape.stride(), cfg.n_steps);

    // positions[i] holds the state after step s0 + i + 1
    positions.clear();
    ParticleState s = tape.checkpoint(seg);
    for (long step = s0; step < s1; ++step) {
      integ.step(s, step);
      positions.push_back(s.positions);
    }

    for (long step = s1 - 1; step >= s0; --step) {
      // loss sensitivity of the state after this step
      if (step % cfg.record_stride == 0) {
        const long j = step / cfg.record_stride;
        for (std::size_t p = 0; p < probes.size(); ++p)
          xb(probes[p].particle, axis_index(probes[p].axis)) += series_grad[p][j];
      }
      const Coordsd& x_next = positions[static_cast<std::size_t>(step - s0)];

      // a' = G - b v'
      Coordsd gb = ab.cwiseProduct(free);
      vb -= b * gb;
      // v' = c (v_half + h G)
      vhb = c * vb.cwiseProduct(free);
      gb += (c * h) * vb.cwiseProduct(free);
      // G = (F(x') - D(x', v_half)) / m
      fb = gb * inv_m;
      field.conservative_vjp(x_next, fb, xb, kbar);
      Coordsd dvb = Coordsd::Zero(n, 2);
      field.dashpot_vjp(x_next, fb, dvb);
      vhb -= dvb;
      vhb = vhb.cwiseProduct(free);
      // x' = x + dt v_half
      xb = xb.cwiseProduct(free);
      vhb += dt * xb;
      // v_half = v + h a
      vb = vhb;
      ab = h * vhb;

      if (!kbar.allFinite() || !xb.allFinite() || !vb.allFinite())
        throw GradientFailure("non-finite adjoint", step + 1);
    }
  }

  // a_0 = F(delta_0) / m on free coordinates
  fb = ab.cwiseProduct(free) * inv_m;
  Coordsd discard = Coordsd::Zero(n, 2);
  field.conservative_vjp(integ.geometry().equilibrium, fb, discard, kbar);
  if (!kbar.allFinite()) throw GradientFailure("non-finite adjoint", 0);
  return kbar;
}

LossEvaluation evaluate_loss(const Experiment& experiment, const MaterialParams& params,
                             const PackingGeometry& geometry, const SimConfig& config) {
  std::vector<ProbeSeries> all;
  all.reserve(experiment.samples.size());
  for (const auto& sample : experiment.samples)
    all.push_back(run_sim(config, params, geometry, sample.drives, sample.probes));
  LossEvaluation ev;
  if (experiment.loss) ev = experiment.loss(all);
  if (experiment.stiffness_term) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(params.size());
    ev.value += experiment.stiffness_term(params.stiffness, g);
  }
  return ev;
}

GradientResult loss_and_grad(const Experiment& experiment, const MaterialParams& params,
                             const PackingGeometry& geometry, const SimConfig& config, long checkpoint_stride) {
  config.validate();
  const long stride = checkpoint_stride > 0 ? checkpoint_stride : Tape::default_stride(config.n_steps);

  std::vector<Integrator> integrators;
  std::vector<Tape> tapes;
  std::vector<ProbeSeries> all;
  integrators.reserve(experiment.samples.size());
  for (const auto& sample : experiment.samples) {
    integrators.emplace_back(params, geometry, config, sample.drives);
    tapes.emplace_back(config.n_steps, stride);
    all.push_back(record_forward(integrators.back(), sample.probes, tapes.back()));
  }

  GradientResult out;
  out.grad = Eigen::VectorXd::Zero(params.size());
  if (experiment.loss) {
    LossEvaluation ev = experiment.loss(all);
    if (ev.series_grad.size() != experiment.samples.size())
      throw ConfigError("loss gradient does not match sample count");
    out.loss = ev.value;
    out.partials = std::move(ev.partials);
    for (std::size_t i = 0; i < experiment.samples.size(); ++i)
      out.grad += backward(integrators[i], experiment.samples[i].probes, tapes[i], ev.series_grad[i]);
  }
  if (experiment.stiffness_term) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(params.size());
    out.loss += experiment.stiffness_term(params.stiffness, g);
    out.grad += g;
  }
  out.nan_count = static_cast<long>((!out.grad.array().isFinite()).count());
  out.max_abs_grad = out.nan_count ? std::numeric_limits<double>::quiet_NaN() : out.grad.cwiseAbs().maxCoeff();
  if (out.nan_count) throw GradientFailure("gradient contains non-finite entries", -1);
  return out;
}

double grad_check(const Experiment& experiment, const MaterialParams& params, const PackingGeometry& geometry,
                  const SimConfig& config, double h, std::span<const int> indices) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const GradientResult analytic = loss_and_grad(experiment, params, geometry, config);
  double worst = 0.0;
  MaterialParams p = params;
  for (int i : indices) {
    p.stiffness = params.stiffness;
    p.stiffness[i] += h;
    const double up = evaluate_loss(experiment, p, geometry, config).value;
    p.stiffness[i] = params.stiffness[i] - h;
    const double down = evaluate_loss(experiment, p, geometry, config).value;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic.grad[i]), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic.grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace grain
