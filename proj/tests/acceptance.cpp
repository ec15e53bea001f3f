#include "grain/losses.hpp"
#include "grain/runner.hpp"
#include "grain/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

using namespace grain;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Experiment experiment_for(const PreparedRun& run, const SimConfig& sim) {
  return make_experiment(run.experiment, run.geometry, sim);
}

// 1 ------------------------------------------------------------------------
Outcome force_correctness() {
  const CheckResult r = check_force_fd(100, 2024);
  return {r.passed, "max relative error " + num(r.value) + " over 100 configurations (N <= 20), limit 1e-5"};
}

// 2 ------------------------------------------------------------------------
Outcome integrator_order() {
  const CheckResult order = check_integrator_order({5e-3, 2.5e-3, 1.25e-3});
  const CheckResult energy = check_energy_conservation(5e-3, 10000, 1e-3);
  return {order.passed && energy.passed,
          "log-log slope " + num(order.value) + " (" + order.detail + "); energy drift " + num(energy.value) + " (" +
              energy.detail + ")"};
}

// 3 ------------------------------------------------------------------------
Outcome packing_stability_of(const std::string& preset, std::string& detail) {
  const RunManifest m = load_preset(preset);
  const PreparedRun run = prepare(m);
  ForceField field(run.params, run.geometry, DampingParams{});
  const double residual = max_force(field, run.geometry.equilibrium);

  Rng rng = make_stream(m.seed, "perturbation");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = m.lattice.diameter;
  ParticleState s = ParticleState::at_rest(run.geometry.equilibrium);
  for (Eigen::Index i = 0; i < s.positions.size(); ++i) s.positions.data()[i] += 1e-6 * sigma * gauss(rng) / std::sqrt(2.0);
  const FireResult relaxed = fire_minimize(s, run.params, run.geometry, m.fire);
  const double back = (relaxed.state.positions - run.geometry.equilibrium).rowwise().norm().maxCoeff();
  const int contacts = contact_numbers(run.geometry.equilibrium, run.params, run.geometry).sum() / 2;

  const bool ok = residual < 1e-10 && back < 1e-5 * sigma && relaxed.residual < m.fire.force_tol;
  detail += preset + ": phi " + num(m.lattice.packing_fraction) + ", " + std::to_string(contacts) +
            " contacts, max |F| " + num(residual) + ", return distance " + num(back / sigma) + " sigma; ";
  return {ok, ""};
}

Outcome packing_stability() {
  std::string detail;
  const bool a = packing_stability_of("and", detail).passed;
  const bool b = packing_stability_of("and_jammed", detail).passed;
  return {a && b, detail};
}

// 4 ------------------------------------------------------------------------
Outcome gradient_exactness() {
  const CheckResult chain = check_adjoint_chain(50, 1e-6, 1e-4);
  const CheckResult lattice = check_adjoint_lattice(5, 5, 0.86, 200, 3, 1e-6, 1e-4);
  return {chain.passed && lattice.passed, "chain max relative error " + num(chain.value) + "; 5x5 lattice (" +
                                              lattice.detail + ") max relative error " + num(lattice.value)};
}

// 5 ------------------------------------------------------------------------
Outcome waveguide_reproduction() {
  const RunManifest m = load_preset("desk_waveguide");
  const PreparedRun run = prepare(m);
  const Experiment ex = experiment_for(run, m.sim);
  int reduced = 0, routed = 0;
  std::ostringstream d;
  for (int t = 0; t < 5; ++t) {
    TrainConfig tc = m.train;
    tc.seed = m.seed + static_cast<std::uint64_t>(t);
    const TrainResult r = train_gd(ex, tc, run.params, run.geometry, m.sim);
    const double initial = r.history.front().total;
    const double final_loss = r.history.back().total;
    if (!r.aborted && final_loss < 0.9 * initial) ++reduced;

    MaterialParams trained = run.params;
    trained.stiffness = r.theta_final;
    bool both = true;
    std::ostringstream pn;
    for (std::size_t s = 0; s < ex.samples.size(); ++s) {
      const auto rec = run_sim(m.sim, trained, run.geometry, ex.samples[s].drives, ex.samples[s].probes);
      const double i0 = wave_intensity(rec[0], run.experiment.intensity_window);
      const double i1 = wave_intensity(rec[1], run.experiment.intensity_window);
      const int correct = s == 0 ? 1 : 0;
      const double share = (correct == 0 ? i0 : i1) / (i0 + i1);
      both = both && share > 0.5;
      pn << (s ? "/" : "") << num(share);
    }
    if (both) ++routed;
    d << "seed " << tc.seed << ": CE " << num(initial) << " -> " << num(final_loss) << ", correct-port share "
      << pn.str() << "; ";
  }
  d << reduced << "/5 seeds reduced CE by 10%, " << routed << "/5 route both frequencies";
  return {reduced >= 4 && routed >= 3, d.str()};
}

// 6 ------------------------------------------------------------------------
Outcome trivial_gate() {
  std::ostringstream d;
  bool ok = true;
  for (const char* preset : {"and", "and_jammed", "desk_and"}) {
    const RunManifest m = load_preset(preset);
    const PreparedRun run = prepare(m);
    std::vector<Probe> probes;
    for (int p : run.experiment.outputs) probes.push_back({p, Axis::x});
    for (int p : run.experiment.outputs) probes.push_back({p, Axis::y});
    const auto rec = run_sim(m.sim, run.params, run.geometry, {}, probes);
    double worst = 0.0;
    for (const auto& r : rec) worst = std::max(worst, wave_intensity(r, run.experiment.mae_window));
    ok = ok && worst < 1e-18;
    d << preset << ": " << num(worst) << "; ";
  }
  d << "limit 1e-18";
  return {ok, d.str()};
}

// 7 ------------------------------------------------------------------------
Outcome gd_vs_random() {
  const RunManifest m = load_preset("desk_and");
  const PreparedRun run = prepare(m);
  const Experiment ex = experiment_for(run, m.sim);
  const ReportObjective objective = make_report_objective(ex, run.params, run.geometry, m.sim);

  std::vector<double> optimized;
  for (int t = 0; t < 5; ++t) {
    TrainConfig tc = m.train;
    tc.seed = m.seed + static_cast<std::uint64_t>(t);
    const TrainResult r = train_gd(ex, tc, run.params, run.geometry, m.sim);
    if (r.aborted) return {false, "training aborted: " + r.abort_reason};
    optimized.push_back(objective(r.theta_best).total);
  }
  const RandomSearchResult rs = random_search(objective, run.geometry.size(), 100, m.seed);
  const std::vector<double> random = rs.totals();
  const SignificanceReport s = compare_to_random(optimized, random, m.seed);
  const bool ok = s.median_optimized < s.median_random && s.vs_all.p_value < 0.05;
  return {ok, "GD median " + num(s.median_optimized) + " vs random median " + num(s.median_random) +
                  ", Mann-Whitney p " + num(s.vs_all.p_value) + " (5 vs 100)"};
}

// 8 ------------------------------------------------------------------------
Outcome spectral_sanity() {
  const double dt = 5e-3, f = 15.0;
  const int n = 3000;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = 1e-3 * std::sin(2 * std::numbers::pi * f * (i + 1) * dt);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  bool ok = true;
  std::ostringstream d;
  for (double c : {0.0, 0.5, 1.0}) {
    const double g = spectral_gain(x, zero, c * x, f, dt);
    ok = ok && std::abs(g - c) <= 0.01 * std::max(c, 1e-12);
    d << "c=" << c << " -> " << num(g) << "; ";
  }
  Eigen::VectorXd out = 0.5 * x;
  out.head(n - 1000).setConstant(7.0);
  const double masked = spectral_gain(x, zero, out, f, dt);
  out(n - 1000) += 1e-3;
  const double touched = spectral_gain(x, zero, out, f, dt);
  const bool window = std::abs(masked - 0.5) < 1e-9 && std::abs(touched - 0.5) > 1e-6;
  d << "prefix ignored: " << (std::abs(masked - 0.5) < 1e-9 ? "yes" : "no")
    << ", first window sample counted: " << (std::abs(touched - 0.5) > 1e-6 ? "yes" : "no");
  bool short_rejected = false;
  try {
    spectral_gain(x.head(999), zero.head(999), x.head(999), f, dt);
  } catch (const DomainError&) {
    short_rejected = true;
  }
  return {ok && window && short_rejected, d.str()};
}

// 9 ------------------------------------------------------------------------
Outcome afpo_contract() {
  RunManifest m = load_preset("desk_and");
  m.evo.generations = 20;
  const PreparedRun run = prepare(m);
  const Experiment ex = experiment_for(run, m.sim);
  const ReportObjective report = make_report_objective(ex, run.params, run.geometry, m.sim);

  bool in_bounds = true;
  const Objective objective = [&](const Eigen::VectorXd& g) {
    in_bounds = in_bounds && g.minCoeff() >= m.evo.k_min && g.maxCoeff() <= m.evo.k_max;
    return report(g).total;
  };
  const EvoResult a = afpo_evolve(objective, run.geometry.size(), m.evo);
  const EvoResult b = afpo_evolve(objective, run.geometry.size(), m.evo);

  bool elitist = true;
  for (std::size_t i = 1; i < a.history.size(); ++i) elitist = elitist && a.history[i].best_loss <= a.history[i - 1].best_loss;
  for (const auto& ind : a.population)
    in_bounds = in_bounds && ind.genome.minCoeff() >= m.evo.k_min && ind.genome.maxCoeff() <= m.evo.k_max;
  bool replay = a.history.size() == b.history.size() && a.best.genome == b.best.genome;
  for (std::size_t i = 0; replay && i < a.history.size(); ++i)
    replay = a.history[i].best_loss == b.history[i].best_loss && a.history[i].mean_loss == b.history[i].mean_loss;

  return {elitist && in_bounds && replay && a.history.size() == 21,
          "best " + num(a.history.front().best_loss) + " -> " + num(a.history.back().best_loss) + " over 20 generations; " +
              "elitism " + (elitist ? "held" : "violated") + ", bounds " + (in_bounds ? "held" : "violated") +
              ", replay " + (replay ? "bitwise identical" : "differs")};
}

// 10 -----------------------------------------------------------------------
Outcome full_preset_smoke() {
  std::ostringstream d;
  bool ok = true;
  for (const char* preset : {"and", "and_jammed"}) {
    RunManifest m = load_preset(preset);
    m.train.epochs = 5;
    const PreparedRun run = prepare(m);
    const Experiment ex = experiment_for(run, m.sim);
    const TrainResult r = train_gd(ex, m.train, run.params, run.geometry, m.sim);
    bool finite = !r.aborted && r.history.size() == 6;
    for (std::size_t i = 0; i < r.history.size(); ++i) {
      finite = finite && std::isfinite(r.history[i].total);
      if (i + 1 < r.history.size()) finite = finite && std::isfinite(r.history[i].max_abs_grad);
    }
    finite = finite && r.theta_final.allFinite();
    ok = ok && finite && ex.samples.size() == 3 && m.sim.n_steps == 3000 && run.geometry.size() == 110;
    d << preset << ": loss " << num(r.history.front().total) << " -> " << num(r.history.back().total)
      << ", max |grad| " << num(r.history.front().max_abs_grad) << ", " << r.simulations << " simulations; ";
  }
  return {ok, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "force correctness", 10, force_correctness},
      {2, "integrator order and energy drift", 30, integrator_order},
      {3, "packing stability", 60, packing_stability},
      {4, "gradient exactness", 300, gradient_exactness},
      {5, "desk-scale waveguide", 1800, waveguide_reproduction},
      {6, "silent output without drives", 10, trivial_gate},
      {7, "gradient descent vs random search", 7200, gd_vs_random},
      {8, "spectral gain sanity", 1, spectral_sanity},
      {9, "AFPO contract", 1200, afpo_contract},
      {10, "full-preset smoke test", 3600, full_preset_smoke},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool in_budget = elapsed < c.budget_seconds;
    const bool pass = o.passed && in_budget;
    if (!pass) ++failures;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << " " << c.name << ": " << o.detail
              << " [" << num(elapsed) << " s, budget " << c.budget_seconds << " s"
              << (in_budget ? "" : ", over budget") << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
