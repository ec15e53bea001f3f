#include "grain/evolve.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace grain {

void EvoConfig::validate() const {
  if (population < 2) throw ConfigError("evo.population must be >= 2");
  if (generations < 0) throw ConfigError("evo.generations must be >= 0");
  if (!(mutation_sigma >= 0.0)) throw ConfigError("evo.mutation_sigma must be >= 0");
  if (!(k_min > 0.0 && k_min < k_max)) throw ConfigError("evo bounds must satisfy 0 < k_min < k_max");
}

std::vector<std::size_t> pareto_front(const std::vector<Individual>& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pop[a].loss != pop[b].loss) return pop[a].loss < pop[b].loss;
    return pop[a].age < pop[b].age;
  });
  // sweep in loss order: an individual survives if it is strictly younger than
  // everything with a lower or equal loss seen so far
  std::vector<std::size_t> front;
  int youngest = std::numeric_limits<int>::max();
  double youngest_loss = 0.0;
  for (std::size_t i : order) {
    const Individual& c = pop[i];
    const bool dominated = c.age > youngest || (c.age == youngest && c.loss > youngest_loss);
    if (dominated) continue;
    if (c.age < youngest) {
      youngest = c.age;
      youngest_loss = c.loss;
    }
    front.push_back(i);
  }
  return front;
}

namespace {

GenerationRecord summarize(int generation, const std::vector<Individual>& pop, int front_size) {
  GenerationRecord r;
  r.generation = generation;
  r.front_size = front_size;
  r.best_loss = pop.front().loss;
  double sum = 0.0;
  for (const auto& ind : pop) {
    r.best_loss = std::min(r.best_loss, ind.loss);
    sum += ind.loss;
  }
  r.mean_loss = sum / static_cast<double>(pop.size());
  return r;
}

}  // namespace

EvoResult afpo_evolve(const Objective& objective, Eigen::Index n_genes, const EvoConfig& config,
                      const std::function<void(const GenerationRecord&)>& progress) {
  config.validate();
  Rng init_rng = make_stream(config.seed, "evo-init");
  Rng mutation_rng = make_stream(config.seed, "mutation");
  Rng injection_rng = make_stream(config.seed, "injection");
  std::normal_distribution<double> gauss(0.0, 1.0);

  EvoResult out;
  const auto evaluate = [&](Individual& ind) {
    ind.loss = objective(ind.genome);
    ++out.evaluations;
  };

  std::vector<Individual> pop(static_cast<std::size_t>(config.population));
  for (auto& ind : pop) {
    ind.genome = uniform_stiffness(init_rng, n_genes, config.k_min, config.k_max);
    evaluate(ind);
  }
  out.history.push_back(summarize(0, pop, static_cast<int>(pareto_front(pop).size())));
  if (progress) progress(out.history.back());

  const std::size_t keep = static_cast<std::size_t>(config.population - 1);
  for (int gen = 1; gen <= config.generations; ++gen) {
    std::vector<std::size_t> front = pareto_front(pop);
    if (front.size() > keep) front.resize(keep);
    std::vector<Individual> next;
    next.reserve(pop.size());
    for (std::size_t i : front) next.push_back(pop[i]);

    const std::size_t n_survivors = next.size();
    std::uniform_int_distribution<std::size_t> pick(0, n_survivors - 1);
    while (next.size() < keep) {
      const Individual& parent = next[pick(mutation_rng)];
      Individual child;
      child.genome = parent.genome;
      child.age = parent.age;
      if (config.crossover && n_survivors > 1 && n_genes > 1) {
        const Individual& other = next[pick(mutation_rng)];
        std::uniform_int_distribution<Eigen::Index> cut(1, n_genes - 1);
        const Eigen::Index c = cut(mutation_rng);
        child.genome.tail(n_genes - c) = other.genome.tail(n_genes - c);
        child.age = std::max(parent.age, other.age);
      }
      for (Eigen::Index g = 0; g < n_genes; ++g) child.genome[g] += config.mutation_sigma * gauss(mutation_rng);
      child.genome = child.genome.cwiseMax(config.k_min).cwiseMin(config.k_max);
      evaluate(child);
      next.push_back(std::move(child));
    }
    for (auto& ind : next) ++ind.age;

    Individual fresh;
    fresh.genome = uniform_stiffness(injection_rng, n_genes, config.k_min, config.k_max);
    fresh.age = 0;
    evaluate(fresh);
    next.push_back(std::move(fresh));

    pop = std::move(next);
    out.history.push_back(summarize(gen, pop, static_cast<int>(front.size())));
    if (progress) progress(out.history.back());
  }

  out.population = pop;
  for (std::size_t i : pareto_front(pop)) out.pareto.push_back(pop[i]);
  out.best = out.pareto.front();
  return out;
}

}  // namespace grain
