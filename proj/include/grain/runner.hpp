#pragma once

#include "grain/evolve.hpp"
#include "grain/manifest.hpp"
#include "grain/optim.hpp"
#include "grain/search.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace grain {

/// Drivers behind the command-line verbs. Each writes its artifacts into
/// `out` (created if missing) and returns the in-memory results. `log` gets
/// one human-readable line per epoch/generation when non-null.

struct PackOutcome {
  PackingSnapshot snapshot;
  CompressionReport report;
  int contacts = 0;
  double max_residual_force = 0.0;
};
PackOutcome run_pack(const RunManifest& manifest, const std::filesystem::path& out, std::ostream* log = nullptr);

struct SimulateOutcome {
  std::vector<std::string> labels;
  std::vector<ProbeSeries> records;  // per sample
  std::vector<std::vector<double>> intensities;  // per sample, per probe
};
/// Uses `stiffness` when given, otherwise the manifest's initial design.
SimulateOutcome run_simulate(const RunManifest& manifest, const std::filesystem::path& out, bool drives = true,
                             const std::optional<Eigen::VectorXd>& stiffness = std::nullopt,
                             std::ostream* log = nullptr);

struct TrainOutcome {
  std::vector<TrainResult> trials;
  std::vector<std::uint64_t> seeds;
};
/// Trial t uses seed manifest.seed + t and writes into out/trial_<t>.
TrainOutcome run_train(const RunManifest& manifest, const std::filesystem::path& out, std::ostream* log = nullptr);

struct EvolveOutcome {
  std::vector<EvoResult> trials;
};
EvolveOutcome run_evolve(const RunManifest& manifest, const std::filesystem::path& out, std::ostream* log = nullptr);

struct RandomSearchOutcome {
  RandomSearchResult result;
  std::optional<SignificanceReport> significance;
};
/// `optimized` holds the totals of optimized designs to test against.
RandomSearchOutcome run_random_search(const RunManifest& manifest, const std::filesystem::path& out,
                                      const std::vector<double>& optimized = {}, std::ostream* log = nullptr);

/// Total (sum of per-case partials) of one design.
ReportObjective make_report_objective(const Experiment& experiment, const MaterialParams& params,
                                      const PackingGeometry& geometry, const SimConfig& sim);

/// Reads `best_total` of every trial from a train report.json.
std::vector<double> read_trial_best_totals(const std::filesystem::path& report);

/// Loss history CSV: step,total,partial_<label>...,lr
void write_loss_history(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace grain
