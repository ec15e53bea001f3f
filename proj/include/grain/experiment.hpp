#pragma once

#include "grain/adjoint.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace grain {

enum class TaskKind { waveguide, and_gate, xor_gate };
enum class LossKind { cross_entropy, mae_time, spectral_gain };

std::string to_string(TaskKind k);
std::string to_string(LossKind k);
TaskKind parse_task(std::string_view s);
LossKind parse_loss(std::string_view s);

struct ExperimentSpec {
  TaskKind kind = TaskKind::and_gate;
  LossKind loss = LossKind::mae_time;
  std::vector<int> inputs;   // 1 port (waveguide) or 2 (gates)
  std::vector<int> outputs;  // 2 ports (waveguide) or 1 (gates)
  std::vector<double> frequencies{15.0};
  double amplitude = 1e-3;
  double intensity_window = 1.0 / 3.0;  // waveguide: drop the first third
  double mae_window = 2.0 / 3.0;        // gates: keep the last third

  void validate(Eigen::Index n_particles) const;
};

/// Waveguide: input on the middle row of the left column, outputs on the right
/// column below (port 0) and above (port 1) the middle row. Gates: inputs on
/// the left column below (input 0) and above (input 1) the middle row, output
/// on the middle row of the right column.
void assign_default_ports(ExperimentSpec& spec, const PackingGeometry& geometry);

/// Presets for the three tasks with the published frequencies and amplitude.
ExperimentSpec default_spec(TaskKind kind);

struct GateCase {
  std::string label;               // "01", "10", "11"
  bool input1 = false;             // X1 vibrating
  bool input2 = false;             // X2 vibrating
  Eigen::VectorXd target;          // one entry per recorded step
};

/// The three non-trivial truth-table rows; the 00 row is left out since a
/// quiet input always yields a quiet output.
std::vector<GateCase> gate_dataset(TaskKind kind, double frequency, double amplitude, const SimConfig& config);

/// Per-case breakdown; `total` is the plain sum of the partials. Gate partials
/// are the per-case MAE terms; waveguide partials are the per-frequency
/// cross-entropy terms divided by the sample count, so they add up to the loss.
struct LossReport {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> partials;
};

LossReport make_report(const std::vector<std::pair<std::string, double>>& partials);

/// Builds drives, probes and the loss for the task.
Experiment make_experiment(const ExperimentSpec& spec, const PackingGeometry& geometry, const SimConfig& config);

// ---------------------------------------------------------------------------
// Randomness: every consumer draws from a named sub-stream of one run seed.

using Rng = std::mt19937_64;
Rng make_stream(std::uint64_t seed, std::string_view name);

Eigen::VectorXd uniform_stiffness(Rng& rng, Eigen::Index n, double lo, double hi);

}  // namespace grain
