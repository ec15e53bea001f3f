#include "grain/evolve.hpp"

#include <doctest.h>

#include <algorithm>

using namespace grain;

namespace {

double sphere(const Eigen::VectorXd& g) { return (g.array() - 3.0).square().sum(); }

}  // namespace

TEST_CASE("pareto front over loss and age") {
  std::vector<Individual> pop(5);
  pop[0] = {Eigen::VectorXd::Zero(1), 1.0, 5};
  pop[1] = {Eigen::VectorXd::Zero(1), 2.0, 1};
  pop[2] = {Eigen::VectorXd::Zero(1), 3.0, 0};
  pop[3] = {Eigen::VectorXd::Zero(1), 2.5, 3};  // dominated by 1
  pop[4] = {Eigen::VectorXd::Zero(1), 1.0, 7};  // dominated by 0
  auto f = pareto_front(pop);
  std::sort(f.begin(), f.end());
  CHECK(f == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("AFPO keeps its elite, respects bounds and replays") {
  EvoConfig c;
  c.population = 20;
  c.generations = 30;
  c.mutation_sigma = 2.0;
  c.seed = 5;
  std::vector<double> best;
  bool in_bounds = true;
  long evaluations = 0;
  const Objective obj = [&](const Eigen::VectorXd& g) {
    in_bounds = in_bounds && g.minCoeff() >= 1.0 && g.maxCoeff() <= 10.0;
    ++evaluations;
    return sphere(g);
  };
  const auto a = afpo_evolve(obj, 6, c, [&](const GenerationRecord& r) { best.push_back(r.best_loss); });
  CHECK(in_bounds);
  CHECK(best.size() == 31);
  for (std::size_t i = 1; i < best.size(); ++i) CHECK(best[i] <= best[i - 1]);
  CHECK(best.back() < best.front());
  CHECK(a.best.loss == best.back());
  CHECK(a.evaluations == evaluations);
  CHECK(a.population.size() == 20);
  for (const auto& ind : a.population) {
    CHECK(ind.genome.minCoeff() >= 1.0);
    CHECK(ind.genome.maxCoeff() <= 10.0);
  }
  CHECK(std::any_of(a.population.begin(), a.population.end(), [](const Individual& i) { return i.age == 0; }));

  const auto b = afpo_evolve(sphere, 6, c);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].best_loss == b.history[i].best_loss);
    CHECK(a.history[i].mean_loss == b.history[i].mean_loss);
  }
  CHECK(a.best.genome == b.best.genome);

  c.seed = 6;
  const auto d = afpo_evolve(sphere, 6, c);
  CHECK(d.best.genome != a.best.genome);
}

TEST_CASE("zero generations return the best of the initial population") {
  EvoConfig c;
  c.population = 15;
  c.generations = 0;
  c.seed = 2;
  const auto r = afpo_evolve(sphere, 4, c);
  double best = r.population.front().loss;
  for (const auto& i : r.population) best = std::min(best, i.loss);
  CHECK(r.best.loss == best);
  CHECK(r.evaluations == 15);
}

TEST_CASE("without mutation only injected genomes add new material") {
  EvoConfig c;
  c.population = 10;
  c.generations = 8;
  c.mutation_sigma = 0.0;
  c.seed = 1;
  std::vector<double> seen;
  const Objective obj = [&](const Eigen::VectorXd& g) {
    const double v = sphere(g);
    seen.push_back(v);
    return v;
  };
  const auto r = afpo_evolve(obj, 3, c);
  for (const auto& ind : r.population) CHECK(std::find(seen.begin(), seen.end(), ind.loss) != seen.end());
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].best_loss <= r.history[i - 1].best_loss);
}

TEST_CASE("evolution config validation") {
  EvoConfig c;
  c.population = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.population = 10;
  c.mutation_sigma = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
