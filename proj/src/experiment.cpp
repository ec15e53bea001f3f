#include "grain/experiment.hpp"

#include "grain/losses.hpp"
#include "grain/packing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grain {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::waveguide: return "waveguide";
    case TaskKind::and_gate: return "and_gate";
    case TaskKind::xor_gate: return "xor_gate";
  }
  return "?";
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::mae_time: return "mae_time";
    case LossKind::spectral_gain: return "spectral_gain";
  }
  return "?";
}

TaskKind parse_task(std::string_view s) {
  if (s == "waveguide") return TaskKind::waveguide;
  if (s == "and_gate" || s == "and") return TaskKind::and_gate;
  if (s == "xor_gate" || s == "xor") return TaskKind::xor_gate;
  throw ConfigError("unknown experiment kind: " + std::string(s));
}

LossKind parse_loss(std::string_view s) {
  if (s == "cross_entropy") return LossKind::cross_entropy;
  if (s == "mae_time") return LossKind::mae_time;
  if (s == "spectral_gain") return LossKind::spectral_gain;
  throw ConfigError("unknown loss kind: " + std::string(s));
}

void ExperimentSpec::validate(Eigen::Index n_particles) const {
  const bool gate = kind != TaskKind::waveguide;
  if (inputs.size() != (gate ? 2u : 1u)) throw ConfigError("wrong number of input ports for the task");
  if (outputs.size() != (gate ? 1u : 2u)) throw ConfigError("wrong number of output ports for the task");
  for (int p : inputs)
    if (p < 0 || p >= n_particles) throw ConfigError("input port out of range");
  for (int p : outputs)
    if (p < 0 || p >= n_particles) throw ConfigError("output port out of range");
  if (frequencies.size() != (gate ? 1u : 2u)) throw ConfigError("wrong number of frequencies for the task");
  for (double f : frequencies)
    if (!(f > 0.0)) throw ConfigError("frequencies must be positive");
  if (!(amplitude >= 0.0)) throw ConfigError("amplitude must be non-negative");
  if (gate && loss == LossKind::cross_entropy) throw ConfigError("cross-entropy loss applies to the waveguide only");
  if (!gate && loss != LossKind::cross_entropy) throw ConfigError("the waveguide is trained with cross-entropy");
}

void assign_default_ports(ExperimentSpec& spec, const PackingGeometry& g) {
  const int mid = g.ny / 2;
  const int off = std::max(1, g.ny / 4);
  const int below = std::max(0, mid - off);
  const int above = std::min(g.ny - 1, mid + off);
  const int last = g.nx - 1;
  if (spec.kind == TaskKind::waveguide) {
    spec.inputs = {g.index(mid, 0)};
    spec.outputs = {g.index(below, last), g.index(above, last)};
  } else {
    spec.inputs = {g.index(below, 0), g.index(above, 0)};
    spec.outputs = {g.index(mid, last)};
  }
}

ExperimentSpec default_spec(TaskKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  s.amplitude = 1e-3;
  if (kind == TaskKind::waveguide) {
    s.loss = LossKind::cross_entropy;
    s.frequencies = {7.0, 15.0};
  } else {
    s.loss = LossKind::mae_time;
    s.frequencies = {15.0};
  }
  return s;
}

std::vector<GateCase> gate_dataset(TaskKind kind, double frequency, double amplitude, const SimConfig& config) {
  if (kind == TaskKind::waveguide) throw ConfigError("gate_dataset: not a gate task");
  const long n = config.n_records();
  Eigen::VectorXd wave(n);
  for (long j = 0; j < n; ++j)
    wave[j] = amplitude * std::sin(2.0 * std::numbers::pi * frequency * config.record_time(j));
  const Eigen::VectorXd quiet = Eigen::VectorXd::Zero(n);
  const bool is_and = kind == TaskKind::and_gate;
  return {
      {"01", false, true, is_and ? quiet : wave},
      {"10", true, false, is_and ? quiet : wave},
      {"11", true, true, is_and ? wave : quiet},
  };
}

LossReport make_report(const std::vector<std::pair<std::string, double>>& partials) {
  LossReport r;
  r.partials = partials;
  for (const auto& [name, v] : partials) r.total += v;
  return r;
}

namespace {

Experiment waveguide_experiment(const ExperimentSpec& spec) {
  Experiment ex;
  for (std::size_t s = 0; s < spec.frequencies.size(); ++s) {
    Sample sample;
    sample.label = "f" + std::to_string(s + 1);
    sample.drives.push_back({spec.inputs[0], spec.amplitude, spec.frequencies[s], Axis::x, 0.0});
    sample.probes = {{spec.outputs[0], Axis::x}, {spec.outputs[1], Axis::x}};
    ex.samples.push_back(std::move(sample));
  }
  // the first frequency belongs to port 1, the second to port 0
  const std::vector<Eigen::Vector2d> targets{{0.0, 1.0}, {1.0, 0.0}};
  const double window = spec.intensity_window;
  std::vector<std::string> labels;
  for (double f : spec.frequencies) labels.push_back("f_" + format_double(f));

  ex.loss = [targets, window, labels](const std::vector<ProbeSeries>& all) {
    std::vector<Eigen::Vector2d> intensities;
    for (const auto& rec : all)
      intensities.emplace_back(wave_intensity(rec[0], window), wave_intensity(rec[1], window));
    const CrossEntropyResult ce = cross_entropy(intensities, targets);
    LossEvaluation ev;
    ev.value = ce.value;
    for (std::size_t s = 0; s < all.size(); ++s) {
      ev.partials.emplace_back(labels[s], ce.per_sample[s] / static_cast<double>(all.size()));
      std::vector<Eigen::VectorXd> grads;
      for (int p = 0; p < 2; ++p) {
        const Eigen::VectorXd& series = all[s][p].series;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(series.size());
        const Eigen::Index start = window_start(series.size(), window);
        g.tail(series.size() - start) = 2.0 * ce.d_intensity[s][p] * series.tail(series.size() - start);
        grads.push_back(std::move(g));
      }
      ev.series_grad.push_back(std::move(grads));
    }
    return ev;
  };
  return ex;
}

Experiment gate_experiment(const ExperimentSpec& spec, const SimConfig& config) {
  Experiment ex;
  const double f = spec.frequencies[0];
  const auto cases = gate_dataset(spec.kind, f, spec.amplitude, config);
  std::vector<Eigen::VectorXd> targets;
  std::vector<std::string> labels;
  for (const auto& c : cases) {
    Sample sample;
    sample.label = c.label;
    if (c.input1) sample.drives.push_back({spec.inputs[0], spec.amplitude, f, Axis::x, 0.0});
    if (c.input2) sample.drives.push_back({spec.inputs[1], spec.amplitude, f, Axis::x, 0.0});
    sample.probes = {{spec.outputs[0], Axis::x}, {spec.inputs[0], Axis::x}, {spec.inputs[1], Axis::x}};
    ex.samples.push_back(std::move(sample));
    targets.push_back(c.target);
    labels.push_back(c.label);
  }

  if (spec.loss == LossKind::mae_time) {
    const double window = spec.mae_window;
    ex.loss = [targets, labels, window](const std::vector<ProbeSeries>& all) {
      LossEvaluation ev;
      const double n = static_cast<double>(all.size());
      for (std::size_t s = 0; s < all.size(); ++s) {
        const Eigen::VectorXd& out = all[s][0].series;
        const Eigen::Index start = window_start(out.size(), window);
        const Eigen::Index w = out.size() - start;
        const double partial = mae_loss(out.tail(w), targets[s].tail(w));
        ev.partials.emplace_back(labels[s], partial);
        ev.value += partial;
        std::vector<Eigen::VectorXd> grads(3, Eigen::VectorXd::Zero(out.size()));
        grads[0].tail(w) = mae_grad(out.tail(w), targets[s].tail(w)) / n;
        ev.series_grad.push_back(std::move(grads));
      }
      ev.value /= n;
      return ev;
    };
    return ex;
  }

  // Spectral loss: distance between achieved and ideal gain per case. The
  // ideal gain is the gain of the target series against the same inputs.
  const double dt = config.dt * static_cast<double>(config.record_stride);
  std::vector<double> ideal;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> inputs;
  for (const auto& c : cases) {
    const long n = config.n_records();
    Eigen::VectorXd x1 = Eigen::VectorXd::Zero(n), x2 = Eigen::VectorXd::Zero(n);
    for (long j = 0; j < n; ++j) {
      const double v = spec.amplitude * std::sin(2.0 * std::numbers::pi * f * config.record_time(j));
      if (c.input1) x1[j] = v;
      if (c.input2) x2[j] = v;
    }
    ideal.push_back(spectral_gain(x1, x2, c.target, f, dt));
    inputs.emplace_back(std::move(x1), std::move(x2));
  }
  ex.loss = [ideal, inputs, labels, f, dt](const std::vector<ProbeSeries>& all) {
    LossEvaluation ev;
    const double n = static_cast<double>(all.size());
    for (std::size_t s = 0; s < all.size(); ++s) {
      Eigen::VectorXd d_out;
      const double gain =
          spectral_gain_with_grad(inputs[s].first, inputs[s].second, all[s][0].series, f, dt, d_out);
      const double diff = gain - ideal[s];
      ev.partials.emplace_back(labels[s], std::abs(diff));
      ev.value += std::abs(diff);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      std::vector<Eigen::VectorXd> grads(all[s].size(), Eigen::VectorXd::Zero(d_out.size()));
      grads[0] = (sign / n) * d_out;
      ev.series_grad.push_back(std::move(grads));
    }
    ev.value /= n;
    return ev;
  };
  return ex;
}

}  // namespace

Experiment make_experiment(const ExperimentSpec& spec, const PackingGeometry& geometry, const SimConfig& config) {
  spec.validate(geometry.size());
  config.validate();
  return spec.kind == TaskKind::waveguide ? waveguide_experiment(spec) : gate_experiment(spec, config);
}

// ---------------------------------------------------------------------------

Rng make_stream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

Eigen::VectorXd uniform_stiffness(Rng& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = dist(rng);
  return k;
}

}  // namespace grain
