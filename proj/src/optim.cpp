#include "grain/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace grain {

Adam::Adam(Eigen::Index n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
  if (grad.size() != m_.size() || theta.size() != m_.size()) throw DomainError("Adam: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  theta.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

MultiStepLR::MultiStepLR(double lr0, std::vector<int> milestones, double gamma)
    : lr0_(lr0), milestones_(std::move(milestones)), gamma_(gamma) {}

double MultiStepLR::at(int epoch) const {
  const auto passed = std::count_if(milestones_.begin(), milestones_.end(), [epoch](int m) { return m <= epoch; });
  return lr0_ * std::pow(gamma_, static_cast<double>(passed));
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be finite and >= 0");
  if (!(lr_gamma > 0.0 && lr_gamma <= 1.0)) throw ConfigError("train.lr_gamma must be in (0, 1]");
  for (std::size_t i = 1; i < lr_milestones.size(); ++i)
    if (lr_milestones[i] <= lr_milestones[i - 1]) throw ConfigError("train.lr_milestones must be strictly increasing");
  if (!(k_min > 0.0 && k_min < k_max)) throw ConfigError("train bounds must satisfy 0 < k_min < k_max");
  if (init == InitKind::fixed && !(init_value >= k_min && init_value <= k_max))
    throw ConfigError("train.init_value outside the stiffness bounds");
  if (init == InitKind::uniform_random && !(init_lo >= k_min && init_hi <= k_max && init_lo < init_hi))
    throw ConfigError("train.init range must lie inside the stiffness bounds");
}

Eigen::VectorXd initial_stiffness(const TrainConfig& config, Eigen::Index n) {
  if (config.init == InitKind::fixed) return Eigen::VectorXd::Constant(n, config.init_value);
  Rng rng = make_stream(config.seed, "init");
  return uniform_stiffness(rng, n, config.init_lo, config.init_hi);
}

TrainResult train_gd(const Experiment& experiment, const TrainConfig& config, const MaterialParams& base,
                     const PackingGeometry& geometry, const SimConfig& sim, const TrainHooks& hooks) {
  config.validate();
  const Eigen::Index n = geometry.size();
  MaterialParams params = base;
  params.stiffness = initial_stiffness(config, n);

  TrainResult out;
  out.theta_initial = params.stiffness;
  out.theta_best = params.stiffness;
  out.best_loss = std::numeric_limits<double>::infinity();
  Adam adam(n);
  const MultiStepLR schedule(config.lr, config.lr_milestones, config.lr_gamma);
  const auto wants_snapshot = [&](int e) {
    return std::find(config.snapshot_epochs.begin(), config.snapshot_epochs.end(), e) != config.snapshot_epochs.end();
  };

  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    if (hooks.snapshot && wants_snapshot(epoch)) hooks.snapshot(epoch, params.stiffness);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = schedule.at(epoch);
    GradientResult g;
    try {
      if (epoch < config.epochs) {
        g = loss_and_grad(experiment, params, geometry, sim);
      } else {
        LossEvaluation ev = evaluate_loss(experiment, params, geometry, sim);
        g.loss = ev.value;
        g.partials = std::move(ev.partials);
      }
    } catch (const Error& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    out.simulations += static_cast<long>(experiment.samples.size());
    rec.total = g.loss;
    rec.partials = g.partials;
    rec.max_abs_grad = g.max_abs_grad;
    if (g.loss < out.best_loss) {
      out.best_loss = g.loss;
      out.theta_best = params.stiffness;
    }
    out.history.push_back(rec);
    if (hooks.progress) hooks.progress(rec);
    if (epoch == config.epochs) break;

    adam.step(params.stiffness, g.grad, rec.lr);
    params.stiffness = params.stiffness.cwiseMax(config.k_min).cwiseMin(config.k_max);
  }
  out.theta_final = params.stiffness;
  return out;
}

}  // namespace grain
