#include "grain/optim.hpp"
#include "grain/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace grain;

TEST_CASE("Adam first step moves every coordinate by the learning rate") {
  Adam adam(3);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(3, 5.0);
  Eigen::VectorXd grad(3);
  grad << 2.0, -0.001, 40.0;
  adam.step(theta, grad, 0.1);
  CHECK(theta(0) == doctest::Approx(4.9).epsilon(1e-6));
  CHECK(theta(1) == doctest::Approx(5.1).epsilon(1e-5));
  CHECK(theta(2) == doctest::Approx(4.9).epsilon(1e-6));
  CHECK(adam.iterations() == 1);
}

TEST_CASE("Adam minimizes a quadratic") {
  Adam adam(2);
  Eigen::VectorXd theta(2);
  theta << 4.0, -3.0;
  for (int i = 0; i < 3000; ++i) adam.step(theta, 2.0 * theta, 0.01);
  CHECK(theta.norm() < 1e-2);
}

TEST_CASE("multi-step schedule") {
  MultiStepLR s(1e-3, {150, 300, 400}, 0.1);
  CHECK(s.at(0) == doctest::Approx(1e-3));
  CHECK(s.at(149) == doctest::Approx(1e-3));
  CHECK(s.at(150) == doctest::Approx(1e-4));
  CHECK(s.at(300) == doctest::Approx(1e-5));
  CHECK(s.at(499) == doctest::Approx(1e-6));
  MultiStepLR flat(0.05, {}, 0.1);
  CHECK(flat.at(1000) == doctest::Approx(0.05));
}

TEST_CASE("training config validation and initialization") {
  TrainConfig c;
  c.init = InitKind::uniform_random;
  c.seed = 9;
  const auto a = initial_stiffness(c, 30);
  CHECK(a == initial_stiffness(c, 30));
  CHECK(a.minCoeff() >= 1.0);
  CHECK(a.maxCoeff() <= 10.0);
  c.init = InitKind::fixed;
  CHECK(initial_stiffness(c, 4) == Eigen::VectorXd::Constant(4, 5.5));
  c.epochs = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.epochs = 5;
  c.lr = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

namespace {

TrainConfig chain_config(int epochs, double lr) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr = lr;
  c.lr_milestones = {};
  c.init = InitKind::uniform_random;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("zero epochs keeps the initial design") {
  const ChainSetup s = chain_setup(40);
  const auto r = train_gd(s.experiment, chain_config(0, 0.1), s.params, s.geometry, s.sim);
  CHECK(r.theta_final == r.theta_initial);
  CHECK(r.history.size() == 1);
  CHECK(r.simulations == 1);
}

TEST_CASE("zero learning rate gives a constant history") {
  const ChainSetup s = chain_setup(40);
  const auto r = train_gd(s.experiment, chain_config(4, 0.0), s.params, s.geometry, s.sim);
  REQUIRE(r.history.size() == 5);
  for (const auto& e : r.history) CHECK(e.total == r.history.front().total);
  CHECK(r.theta_final == r.theta_initial);
}

TEST_CASE("training decreases the loss, respects bounds and replays bitwise") {
  const ChainSetup s = chain_setup(60);
  std::vector<int> snapshots;
  TrainHooks hooks;
  hooks.snapshot = [&](int e, const Eigen::VectorXd&) { snapshots.push_back(e); };
  TrainConfig c = chain_config(30, 0.5);
  c.snapshot_epochs = {0, 10, 30};
  const auto a = train_gd(s.experiment, c, s.params, s.geometry, s.sim, hooks);
  const auto b = train_gd(s.experiment, c, s.params, s.geometry, s.sim);
  CHECK(a.history.back().total < a.history.front().total);
  CHECK(a.best_loss <= a.history.back().total);
  CHECK(a.theta_final.minCoeff() >= 1.0);
  CHECK(a.theta_final.maxCoeff() <= 10.0);
  CHECK(snapshots == std::vector<int>{0, 10, 30});
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].total == b.history[i].total);
  CHECK(a.theta_final == b.theta_final);
}
