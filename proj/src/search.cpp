#include "grain/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace grain {

namespace {

/// Number of rank arrangements of m vs n items giving each U value, tie-free.
std::vector<double> u_distribution(int m, int n) {
  // f[i][j][u] built iteratively over i + j; keep a 2D table of vectors
  std::vector<std::vector<std::vector<double>>> f(m + 1, std::vector<std::vector<double>>(n + 1));
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= n; ++j) {
      std::vector<double>& cur = f[i][j];
      cur.assign(static_cast<std::size_t>(i * j + 1), 0.0);
      if (i == 0 || j == 0) {
        cur[0] = 1.0;
        continue;
      }
      // largest element belongs to the first sample: it beats all j others
      const auto& a = f[i - 1][j];
      for (std::size_t u = 0; u < a.size(); ++u) cur[u + static_cast<std::size_t>(j)] += a[u];
      const auto& b = f[i][j - 1];
      for (std::size_t u = 0; u < b.size(); ++u) cur[u] += b[u];
    }
  return f[m][n];
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("mann_whitney_u: both samples must be non-empty");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_sum += rank;
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }

  MannWhitneyResult r;
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
  r.u = rank_sum - d1 * (d1 + 1.0) / 2.0;

  if (!ties && n1 * n2 <= 2500 && n1 <= 50 && n2 <= 50) {
    const std::vector<double> counts = u_distribution(static_cast<int>(n1), static_cast<int>(n2));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(r.u));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k <= u; ++k) lower += counts[k];
    for (std::size_t k = u; k < counts.size(); ++k) upper += counts[k];
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    r.exact = true;
    return r;
  }

  const double dn = static_cast<double>(n);
  const double mu = d1 * d2 / 2.0;
  const double var = d1 * d2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double diff = std::abs(r.u - mu);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> RandomSearchResult::totals() const {
  std::vector<double> t;
  t.reserve(reports.size());
  for (const auto& r : reports) t.push_back(r.total);
  return t;
}

RandomSearchResult random_search(const ReportObjective& objective, Eigen::Index n_genes, int n, std::uint64_t seed,
                                 double lo, double hi) {
  if (n < 1) throw ConfigError("random_search needs at least one configuration");
  if (!(lo > 0.0 && lo < hi)) throw ConfigError("random_search bounds must satisfy 0 < lo < hi");
  Rng rng = make_stream(seed, "random-search");
  RandomSearchResult out;
  for (int i = 0; i < n; ++i) {
    out.designs.push_back(uniform_stiffness(rng, n_genes, lo, hi));
    out.reports.push_back(objective(out.designs.back()));
  }
  return out;
}

SignificanceReport compare_to_random(std::span<const double> optimized, std::span<const double> random,
                                     std::uint64_t seed) {
  if (optimized.empty() || random.empty()) throw DomainError("compare_to_random: empty sample");
  SignificanceReport rep;
  rep.median_optimized = median({optimized.begin(), optimized.end()});
  rep.median_random = median({random.begin(), random.end()});
  rep.vs_all = mann_whitney_u(optimized, random);

  std::vector<double> subset(random.begin(), random.end());
  Rng rng = make_stream(seed, "significance-subset");
  std::shuffle(subset.begin(), subset.end(), rng);
  subset.resize(std::min(subset.size(), optimized.size()));
  rep.vs_matched = mann_whitney_u(optimized, subset);
  return rep;
}

}  // namespace grain
