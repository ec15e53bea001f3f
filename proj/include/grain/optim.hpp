#pragma once

#include "grain/experiment.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace grain {

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8 by default).
class Adam {
 public:
  explicit Adam(Eigen::Index n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr);
  long iterations() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

/// Learning rate lr0 * gamma^(number of milestones <= epoch).
class MultiStepLR {
 public:
  MultiStepLR(double lr0, std::vector<int> milestones, double gamma);
  double at(int epoch) const;

 private:
  double lr0_;
  std::vector<int> milestones_;
  double gamma_;
};

enum class InitKind { fixed, uniform_random };

struct TrainConfig {
  int epochs = 500;
  double lr = 0.01;
  std::vector<int> lr_milestones{150, 300, 400};
  double lr_gamma = 0.1;
  InitKind init = InitKind::fixed;
  double init_value = 5.5;
  double init_lo = 1.0;
  double init_hi = 10.0;
  std::uint64_t seed = 0;
  double k_min = MaterialParams::k_min;
  double k_max = MaterialParams::k_max;
  std::vector<int> snapshot_epochs;  // epochs whose theta is handed to the snapshot callback

  void validate() const;
};

Eigen::VectorXd initial_stiffness(const TrainConfig& config, Eigen::Index n);

struct EpochRecord {
  int epoch = 0;
  double total = 0.0;
  std::vector<std::pair<std::string, double>> partials;
  double lr = 0.0;
  double max_abs_grad = 0.0;
};

struct TrainResult {
  Eigen::VectorXd theta_initial;
  Eigen::VectorXd theta_final;
  Eigen::VectorXd theta_best;  // design with the lowest evaluated loss
  double best_loss = 0.0;
  std::vector<EpochRecord> history;
  long simulations = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct TrainHooks {
  std::function<void(int epoch, const Eigen::VectorXd& theta)> snapshot;
  std::function<void(const EpochRecord&)> progress;
};

/// Full-batch gradient descent with Adam. Each epoch evaluates the loss and
/// gradient at the current design, records them, then updates and clamps.
/// After the last update the final design is evaluated once more so the
/// history has epochs + 1 entries (entry e is the loss before update e).
/// A gradient failure stops training and keeps the history so far.
TrainResult train_gd(const Experiment& experiment, const TrainConfig& config, const MaterialParams& base,
                     const PackingGeometry& geometry, const SimConfig& sim, const TrainHooks& hooks = {});

}  // namespace grain
