#pragma once

#include "grain/experiment.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace grain {

struct MannWhitneyResult {
  double u = 0.0;        // U statistic of the first sample
  double p_value = 1.0;  // two-sided
  bool exact = false;
};

/// Two-sided Mann-Whitney U test. Uses the exact null distribution for small
/// tie-free samples and the tie-corrected normal approximation with continuity
/// correction otherwise.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

double median(std::vector<double> values);

using ReportObjective = std::function<LossReport(const Eigen::VectorXd&)>;

struct RandomSearchResult {
  std::vector<Eigen::VectorXd> designs;
  std::vector<LossReport> reports;
  std::vector<double> totals() const;
};

/// n designs drawn uniformly from [lo, hi]^n_genes on the "random-search"
/// stream of `seed`, each evaluated once.
RandomSearchResult random_search(const ReportObjective& objective, Eigen::Index n_genes, int n, std::uint64_t seed,
                                 double lo = MaterialParams::k_min, double hi = MaterialParams::k_max);

struct SignificanceReport {
  double median_optimized = 0.0;
  double median_random = 0.0;
  MannWhitneyResult vs_matched;  // against a random subset the size of the optimized set
  MannWhitneyResult vs_all;      // against every random design
};

SignificanceReport compare_to_random(std::span<const double> optimized, std::span<const double> random,
                                     std::uint64_t seed);

}  // namespace grain
