#include "grain/runner.hpp"
#include "grain/verify.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kPhysics = 3, kNonConvergence = 4 };

struct Common {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_trials) {
  cmd->add_option("--config", c.config, "Run manifest (INI)");
  cmd->add_option("--preset", c.preset, "Shipped preset: waveguide, and, xor or another name in presets/");
  cmd->add_option("--out", c.out, "Output directory (defaults to the manifest's output_dir)");
  cmd->add_option("--seed", c.seed, "Override the run seed");
  if (with_trials) cmd->add_option("--trials", c.trials, "Override the number of independent trials");
  cmd->add_flag("--quiet", c.quiet, "Only print the final summary");
}

grain::RunManifest load(const Common& c) {
  if (c.config.empty() == c.preset.empty()) throw grain::ConfigError("give exactly one of --config or --preset");
  grain::RunManifest m = c.config.empty() ? grain::load_preset(c.preset) : grain::read_manifest(c.config);
  if (c.seed) {
    m.seed = *c.seed;
    m.train.seed = m.seed;
    m.evo.seed = m.seed;
  }
  if (c.trials) m.trials = *c.trials;
  m.validate();
  return m;
}

std::filesystem::path out_dir(const Common& c, const grain::RunManifest& m) {
  return c.out.empty() ? std::filesystem::path(m.output_dir) : std::filesystem::path(c.out);
}

std::vector<double> parse_losses(const std::string& text) {
  std::vector<double> v;
  std::string item;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      if (!item.empty()) v.push_back(grain::parse_double(item));
      item.clear();
    } else if (text[i] != ' ') {
      item += text[i];
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Granular crystal simulation and stiffness inverse design"};
  app.require_subcommand(1);

  Common common;
  auto* pack = app.add_subcommand("pack", "Generate a packing and write its snapshot");
  add_common(pack, common, false);

  bool no_drive = false;
  std::string stiffness_file;
  auto* simulate = app.add_subcommand("simulate", "Run the forward simulation of every sample and write trajectories");
  add_common(simulate, common, false);
  simulate->add_flag("--no-drive", no_drive, "Leave every input particle at rest");
  simulate->add_option("--stiffness", stiffness_file, "Packing snapshot whose stiffness column is used");

  auto* train = app.add_subcommand("train", "Gradient-based design with Adam");
  add_common(train, common, true);

  auto* evolve = app.add_subcommand("evolve", "Age-fitness Pareto evolution");
  add_common(evolve, common, true);

  std::string compare_report, compare_losses;
  auto* search = app.add_subcommand("random-search", "Evaluate uniformly random designs");
  add_common(search, common, false);
  search->add_option("--compare", compare_report, "Train report.json whose trial best totals are tested against");
  search->add_option("--optimized", compare_losses, "Comma-separated totals of optimized designs");

  auto* verify = app.add_subcommand("verify", "Run the built-in verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (verify->parsed()) {
      bool ok = true;
      for (const auto& r : grain::run_verification_suite()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  value=" << r.value << "  tolerance=" << r.tolerance
                  << "  (" << r.detail << ")\n";
        ok = ok && r.passed;
      }
      return ok ? kOk : kOther;
    }

    const grain::RunManifest m = load(common);
    const auto out = out_dir(common, m);
    std::ostream* log = common.quiet ? nullptr : &std::cout;

    if (pack->parsed()) {
      const auto o = grain::run_pack(m, out, &std::cout);
      std::cout << "snapshot written to " << (out / "packing.txt").string() << " (" << o.snapshot.geometry.size()
                << " particles)\n";
    } else if (simulate->parsed()) {
      std::optional<Eigen::VectorXd> k;
      if (!stiffness_file.empty()) k = grain::read_snapshot(stiffness_file).stiffness;
      grain::run_simulate(m, out, !no_drive, k, &std::cout);
      std::cout << "trajectories written to " << out.string() << "\n";
    } else if (train->parsed()) {
      const auto o = grain::run_train(m, out, log);
      for (std::size_t t = 0; t < o.trials.size(); ++t)
        std::cout << "trial " << t << ": initial " << o.trials[t].history.front().total << ", final "
                  << o.trials[t].history.back().total << ", best " << o.trials[t].best_loss << "\n";
      std::cout << "artifacts written to " << out.string() << "\n";
    } else if (evolve->parsed()) {
      const auto o = grain::run_evolve(m, out, log);
      for (std::size_t t = 0; t < o.trials.size(); ++t)
        std::cout << "trial " << t << ": best " << o.trials[t].best.loss << "\n";
      std::cout << "artifacts written to " << out.string() << "\n";
    } else if (search->parsed()) {
      std::vector<double> optimized = parse_losses(compare_losses);
      if (!compare_report.empty()) {
        const auto more = grain::read_trial_best_totals(compare_report);
        optimized.insert(optimized.end(), more.begin(), more.end());
      }
      grain::run_random_search(m, out, optimized, &std::cout);
      std::cout << "artifacts written to " << out.string() << "\n";
    }
    return kOk;
  } catch (const grain::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const grain::NonConvergence& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const grain::SimulationFailure& e) {
    std::cerr << "simulation failure: " << e.what() << "\n";
    return kPhysics;
  } catch (const grain::GradientFailure& e) {
    std::cerr << "gradient failure: " << e.what() << "\n";
    return kPhysics;
  } catch (const grain::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kPhysics;
  } catch (const grain::DegenerateInput& e) {
    std::cerr << "degenerate input: " << e.what() << "\n";
    return kPhysics;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
