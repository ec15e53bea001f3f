#pragma once

#include "grain/sim.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace grain {

using ProbeSeries = std::vector<ProbeRecord>;  // one sample's recorded probes

/// Value of a loss over all samples together with its sensitivity to every
/// recorded entry (same shape as the records).
struct LossEvaluation {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> partials;
  std::vector<std::vector<Eigen::VectorXd>> series_grad;  // [sample][probe]
};

using SeriesLoss = std::function<LossEvaluation(const std::vector<ProbeSeries>&)>;

/// Optional direct dependence of the loss on the stiffness vector. Returns the
/// value and writes the gradient.
using StiffnessTerm = std::function<double(const Eigen::VectorXd& k, Eigen::VectorXd& grad)>;

struct Sample {
  std::string label;
  std::vector<DriveSignal> drives;
  std::vector<Probe> probes;
};

struct Experiment {
  std::vector<Sample> samples;
  SeriesLoss loss;
  StiffnessTerm stiffness_term;  // may be empty
};

struct GradientResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
  std::vector<std::pair<std::string, double>> partials;
  double max_abs_grad = 0.0;
  long nan_count = 0;
};

/// Checkpoints of one forward simulation: the full integrator state every
/// `stride` steps, enough to re-execute any segment bit for bit.
class Tape {
 public:
  Tape(long n_steps, long stride);

  long stride() const { return stride_; }
  long n_steps() const { return n_steps_; }
  long segments() const { return static_cast<long>(checkpoints_.size()); }
  /// State before step segment * stride.
  const ParticleState& checkpoint(long segment) const { return checkpoints_.at(segment); }
  void push(const ParticleState& s) { checkpoints_.push_back(s); }

  static long default_stride(long n_steps);

 private:
  long n_steps_;
  long stride_;
  std::vector<ParticleState> checkpoints_;
};

/// Forward pass that records probes and fills the tape.
ProbeSeries record_forward(Integrator& integ, std::span<const Probe> probes, Tape& tape);

/// Reverse pass for one sample: returns dL/dk given dL/d(records).
Eigen::VectorXd backward(Integrator& integ, std::span<const Probe> probes, const Tape& tape,
                         const std::vector<Eigen::VectorXd>& series_grad);

/// Forward-only evaluation of the experiment.
LossEvaluation evaluate_loss(const Experiment& experiment, const MaterialParams& params,
                             const PackingGeometry& geometry, const SimConfig& config);

/// Loss and exact gradient of the implemented discrete dynamics with respect
/// to the stiffness vector. checkpoint_stride <= 0 selects ceil(sqrt(T)).
GradientResult loss_and_grad(const Experiment& experiment, const MaterialParams& params,
                             const PackingGeometry& geometry, const SimConfig& config, long checkpoint_stride = 0);

/// Worst relative disagreement between the adjoint gradient and central
/// differences over the sampled stiffness indices.
double grad_check(const Experiment& experiment, const MaterialParams& params, const PackingGeometry& geometry,
                  const SimConfig& config, double h, std::span<const int> indices);

}  // namespace grain
