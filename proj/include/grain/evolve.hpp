#pragma once

#include "grain/experiment.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace grain {

struct EvoConfig {
  int population = 100;
  int generations = 1000;
  double mutation_sigma = 0.1;
  bool crossover = false;  // single-point crossover between two survivors before mutation
  std::uint64_t seed = 0;
  double k_min = MaterialParams::k_min;
  double k_max = MaterialParams::k_max;

  void validate() const;
};

struct Individual {
  Eigen::VectorXd genome;
  double loss = 0.0;
  int age = 0;
};

struct GenerationRecord {
  int generation = 0;
  double best_loss = 0.0;
  double mean_loss = 0.0;
  int front_size = 0;
};

struct EvoResult {
  std::vector<Individual> population;  // final population
  std::vector<Individual> pareto;      // non-dominated (loss, age) set of the final population, by loss
  std::vector<GenerationRecord> history;
  Individual best;
  long evaluations = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Indices of the individuals not dominated on (loss, age), both minimized,
/// ordered by loss then age then index.
std::vector<std::size_t> pareto_front(const std::vector<Individual>& population);

/// Age-fitness Pareto optimization over real-valued genomes in [k_min, k_max].
/// Generation 0 is a uniformly random population. Each later generation keeps
/// the (loss, age) front, truncated to population - 1 by loss, refills with
/// mutated copies of survivors that inherit their parent's age, ages everyone
/// by one and injects a fresh random genome of age 0. History entry g holds the
/// population after generation g.
EvoResult afpo_evolve(const Objective& objective, Eigen::Index n_genes, const EvoConfig& config,
                      const std::function<void(const GenerationRecord&)>& progress = {});

}  // namespace grain
