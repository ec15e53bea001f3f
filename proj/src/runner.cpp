#include "grain/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <limits>
#include <fstream>
#include <ostream>

namespace grain {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(17);
  return f;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << "\n"; }

json partials_json(const std::vector<std::pair<std::string, double>>& partials) {
  json j = json::object();
  for (const auto& [name, v] : partials) j[name] = v;
  return j;
}

double report_total(const std::vector<std::pair<std::string, double>>& partials) {
  return make_report(partials).total;
}

PackingSnapshot snapshot_of(const PreparedRun& run, const Eigen::VectorXd& stiffness) {
  PackingSnapshot s;
  s.geometry = run.geometry;
  s.diameter = run.params.diameter;
  s.packing_fraction = packing_fraction(run.geometry.size(), run.params.diameter, run.geometry);
  s.stiffness = stiffness;
  return s;
}

RunManifest with_output(RunManifest m, const fs::path& out) {
  m.output_dir = out.string();
  return m;
}

}  // namespace

void write_loss_history(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "step,total";
  if (!history.empty())
    for (const auto& [name, v] : history.front().partials) out << ",partial_" << name;
  out << ",lr\n";
  for (const auto& r : history) {
    out << r.epoch << "," << format_double(report_total(r.partials));
    for (const auto& [name, v] : r.partials) out << "," << format_double(v);
    out << "," << format_double(r.lr) << "\n";
  }
}

ReportObjective make_report_objective(const Experiment& experiment, const MaterialParams& params,
                                      const PackingGeometry& geometry, const SimConfig& sim) {
  return [&experiment, params, &geometry, sim](const Eigen::VectorXd& k) {
    MaterialParams p = params;
    p.stiffness = k;
    return make_report(evaluate_loss(experiment, p, geometry, sim).partials);
  };
}

PackOutcome run_pack(const RunManifest& manifest, const fs::path& out, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out);
  const PreparedRun run = prepare(manifest);
  PackOutcome o;
  o.report = run.packing_report;
  o.snapshot = snapshot_of(run, run.params.stiffness);
  ForceField field(run.params, run.geometry, DampingParams{0.0, 0.0, 0.0}, NeighborSearch::all_pairs);
  o.max_residual_force = max_force(field, run.geometry.equilibrium);
  o.contacts = contact_numbers(run.geometry.equilibrium, run.params, run.geometry).sum() / 2;
  write_snapshot((out / "packing.txt").string(), o.snapshot);
  write_manifest(out / "manifest.ini", with_output(manifest, out));
  json j;
  j["particles"] = run.geometry.size();
  j["lattice"] = {run.geometry.nx, run.geometry.ny};
  j["box"] = {run.geometry.box()[0], run.geometry.box()[1]};
  j["packing_fraction"] = o.snapshot.packing_fraction;
  j["max_residual_force"] = o.max_residual_force;
  j["contacts"] = o.contacts;
  j["fire_iterations"] = o.report.fire_iterations;
  j["compression_steps"] = o.report.outer_steps;
  j["wall_time_s"] = seconds_since(t0);
  write_json(out / "pack_report.json", j);
  if (log)
    *log << "packed " << run.geometry.size() << " particles, phi = " << o.snapshot.packing_fraction
         << ", residual = " << o.max_residual_force << ", contacts = " << o.contacts << "\n";
  return o;
}

SimulateOutcome run_simulate(const RunManifest& manifest, const fs::path& out, bool drives,
                             const std::optional<Eigen::VectorXd>& stiffness, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out);
  const PreparedRun run = prepare(manifest);
  MaterialParams params = run.params;
  params.stiffness = stiffness ? *stiffness : initial_stiffness(manifest.train, run.geometry.size());
  if (params.stiffness.size() != run.geometry.size()) throw ConfigError("stiffness vector has the wrong length");
  const Experiment ex = make_experiment(run.experiment, run.geometry, manifest.sim);
  const double window = run.experiment.kind == TaskKind::waveguide ? run.experiment.intensity_window
                                                                   : run.experiment.mae_window;
  SimulateOutcome o;
  json samples = json::array();
  for (const auto& sample : ex.samples) {
    const std::vector<DriveSignal> none;
    const auto& d = drives ? sample.drives : none;
    ProbeSeries rec;
    try {
      rec = run_sim(manifest.sim, params, run.geometry, d, sample.probes);
    } catch (...) {
      std::ofstream(out / ("trajectory_" + sample.label + ".csv")) << "# simulation failed\n";
      throw;
    }
    auto csv = open_out(out / ("trajectory_" + sample.label + ".csv"));
    write_trajectory_csv(csv, manifest.sim, rec);
    std::vector<double> inten;
    json probes = json::array();
    for (const auto& r : rec) {
      inten.push_back(wave_intensity(r, window));
      probes.push_back({{"particle", r.probe.particle}, {"axis", axis_name(r.probe.axis)}, {"intensity", inten.back()}});
    }
    json js = {{"label", sample.label}, {"driven", drives}, {"probes", probes}};
    if (run.experiment.kind == TaskKind::waveguide && inten.size() == 2 && inten[0] + inten[1] > 0.0)
      js["normalized"] = {inten[0] / (inten[0] + inten[1]), inten[1] / (inten[0] + inten[1])};
    samples.push_back(js);
    if (log) {
      *log << sample.label << ":";
      for (double v : inten) *log << " " << v;
      *log << "\n";
    }
    o.labels.push_back(sample.label);
    o.records.push_back(std::move(rec));
    o.intensities.push_back(std::move(inten));
  }
  write_manifest(out / "manifest.ini", with_output(manifest, out));
  write_json(out / "summary.json", {{"window_start_fraction", window},
                                    {"samples", samples},
                                    {"wall_time_s", seconds_since(t0)}});
  return o;
}

TrainOutcome run_train(const RunManifest& manifest, const fs::path& out, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out);
  write_manifest(out / "manifest.ini", with_output(manifest, out));
  const PreparedRun run = prepare(manifest);
  const Experiment ex = make_experiment(run.experiment, run.geometry, manifest.sim);
  write_snapshot((out / "packing.txt").string(), snapshot_of(run, run.params.stiffness));

  TrainOutcome o;
  json trials = json::array();
  for (int t = 0; t < manifest.trials; ++t) {
    const auto t1 = std::chrono::steady_clock::now();
    const fs::path dir = out / ("trial_" + std::to_string(t));
    fs::create_directories(dir);
    TrainConfig cfg = manifest.train;
    cfg.seed = manifest.seed + static_cast<std::uint64_t>(t);
    TrainHooks hooks;
    hooks.snapshot = [&](int epoch, const Eigen::VectorXd& theta) {
      write_snapshot((dir / ("theta_epoch_" + std::to_string(epoch) + ".txt")).string(), snapshot_of(run, theta));
    };
    if (log)
      hooks.progress = [&](const EpochRecord& r) {
        *log << "trial " << t << " epoch " << r.epoch << " loss " << r.total << " lr " << r.lr << "\n";
      };
    TrainResult res = train_gd(ex, cfg, run.params, run.geometry, manifest.sim, hooks);
    {
      auto csv = open_out(dir / "loss_history.csv");
      write_loss_history(csv, res.history);
    }
    write_snapshot((dir / "theta_initial.txt").string(), snapshot_of(run, res.theta_initial));
    write_snapshot((dir / "theta_final.txt").string(), snapshot_of(run, res.theta_final));
    write_snapshot((dir / "theta_best.txt").string(), snapshot_of(run, res.theta_best));

    double best_total = std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::string, double>> best_partials;
    for (const auto& r : res.history) {
      const double tot = report_total(r.partials);
      if (tot < best_total) {
        best_total = tot;
        best_partials = r.partials;
      }
    }
    json jt = {{"trial", t},
               {"seed", cfg.seed},
               {"epochs_completed", res.history.empty() ? 0 : res.history.back().epoch},
               {"simulations", res.simulations},
               {"aborted", res.aborted},
               {"wall_time_s", seconds_since(t1)}};
    if (res.aborted) jt["abort_reason"] = res.abort_reason;
    if (!res.history.empty()) {
      jt["initial_loss"] = res.history.front().total;
      jt["final_loss"] = res.history.back().total;
      jt["best_loss"] = res.best_loss;
      jt["best_total"] = best_total;
      jt["best_partials"] = partials_json(best_partials);
      jt["final_partials"] = partials_json(res.history.back().partials);
    }
    trials.push_back(jt);
    o.trials.push_back(std::move(res));
    o.seeds.push_back(cfg.seed);
  }
  write_json(out / "report.json", {{"name", manifest.name},
                                   {"kind", to_string(manifest.experiment.kind)},
                                   {"loss", to_string(manifest.experiment.loss)},
                                   {"seed", manifest.seed},
                                   {"code_version", manifest.code_version},
                                   {"trials", trials},
                                   {"wall_time_s", seconds_since(t0)}});
  for (const auto& r : o.trials)
    if (r.aborted) throw GradientFailure("training aborted: " + r.abort_reason, -1);
  return o;
}

EvolveOutcome run_evolve(const RunManifest& manifest, const fs::path& out, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out);
  write_manifest(out / "manifest.ini", with_output(manifest, out));
  const PreparedRun run = prepare(manifest);
  const Experiment ex = make_experiment(run.experiment, run.geometry, manifest.sim);
  const ReportObjective report = make_report_objective(ex, run.params, run.geometry, manifest.sim);
  const Objective objective = [&](const Eigen::VectorXd& k) { return report(k).total; };

  EvolveOutcome o;
  json trials = json::array();
  for (int t = 0; t < manifest.trials; ++t) {
    const auto t1 = std::chrono::steady_clock::now();
    const fs::path dir = out / ("trial_" + std::to_string(t));
    fs::create_directories(dir);
    EvoConfig cfg = manifest.evo;
    cfg.seed = manifest.seed + static_cast<std::uint64_t>(t);
    std::function<void(const GenerationRecord&)> progress;
    if (log)
      progress = [&](const GenerationRecord& g) {
        *log << "trial " << t << " generation " << g.generation << " best " << g.best_loss << "\n";
      };
    EvoResult res = afpo_evolve(objective, run.geometry.size(), cfg, progress);
    {
      auto csv = open_out(dir / "loss_history.csv");
      csv << "step,best,mean,front_size\n";
      for (const auto& g : res.history)
        csv << g.generation << "," << format_double(g.best_loss) << "," << format_double(g.mean_loss) << ","
            << g.front_size << "\n";
    }
    write_snapshot((dir / "theta_best.txt").string(), snapshot_of(run, res.best.genome));
    const LossReport best = report(res.best.genome);
    trials.push_back({{"trial", t},
                      {"seed", cfg.seed},
                      {"best_total", best.total},
                      {"best_partials", partials_json(best.partials)},
                      {"best_age", res.best.age},
                      {"pareto_size", res.pareto.size()},
                      {"simulations", res.evaluations * static_cast<long>(ex.samples.size())},
                      {"wall_time_s", seconds_since(t1)}});
    o.trials.push_back(std::move(res));
  }
  write_json(out / "report.json", {{"name", manifest.name},
                                   {"kind", to_string(manifest.experiment.kind)},
                                   {"seed", manifest.seed},
                                   {"code_version", manifest.code_version},
                                   {"trials", trials},
                                   {"wall_time_s", seconds_since(t0)}});
  return o;
}

RandomSearchOutcome run_random_search(const RunManifest& manifest, const fs::path& out,
                                      const std::vector<double>& optimized, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out);
  write_manifest(out / "manifest.ini", with_output(manifest, out));
  const PreparedRun run = prepare(manifest);
  const Experiment ex = make_experiment(run.experiment, run.geometry, manifest.sim);
  const ReportObjective report = make_report_objective(ex, run.params, run.geometry, manifest.sim);
  RandomSearchOutcome o;
  o.result = random_search(report, run.geometry.size(), manifest.random_search.configurations, manifest.seed,
                           manifest.random_search.lo, manifest.random_search.hi);
  {
    auto csv = open_out(out / "random_search.csv");
    csv << "index,total";
    for (const auto& [name, v] : o.result.reports.front().partials) csv << ",partial_" << name;
    csv << "\n";
    for (std::size_t i = 0; i < o.result.reports.size(); ++i) {
      csv << i << "," << format_double(o.result.reports[i].total);
      for (const auto& [name, v] : o.result.reports[i].partials) csv << "," << format_double(v);
      csv << "\n";
    }
  }
  const std::vector<double> totals = o.result.totals();
  json j = {{"name", manifest.name},
            {"seed", manifest.seed},
            {"configurations", totals.size()},
            {"simulations", totals.size() * ex.samples.size()},
            {"median_total", median(totals)},
            {"min_total", *std::min_element(totals.begin(), totals.end())},
            {"code_version", manifest.code_version}};
  if (!optimized.empty()) {
    o.significance = compare_to_random(optimized, totals, manifest.seed);
    const auto& s = *o.significance;
    j["comparison"] = {{"optimized", optimized},
                       {"median_optimized", s.median_optimized},
                       {"median_random", s.median_random},
                       {"p_value_matched", s.vs_matched.p_value},
                       {"p_value_all", s.vs_all.p_value},
                       {"u_all", s.vs_all.u},
                       {"test", "two-sided Mann-Whitney U"}};
    if (log) *log << "p (size-matched) = " << s.vs_matched.p_value << ", p (all) = " << s.vs_all.p_value << "\n";
  }
  j["wall_time_s"] = seconds_since(t0);
  write_json(out / "report.json", j);
  if (log) *log << "random search: median total " << median(totals) << " over " << totals.size() << " designs\n";
  return o;
}

std::vector<double> read_trial_best_totals(const fs::path& report) {
  std::ifstream in(report);
  if (!in) throw ConfigError("cannot open " + report.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed report " + report.string() + ": " + e.what());
  }
  std::vector<double> out;
  for (const auto& t : j.at("trials"))
    if (t.contains("best_total")) out.push_back(t.at("best_total").get<double>());
  if (out.empty()) throw ConfigError("report has no trial totals: " + report.string());
  return out;
}

}  // namespace grain
