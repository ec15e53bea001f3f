#include "grain/search.hpp"

#include <doctest.h>

#include <random>

using namespace grain;

TEST_CASE("exact Mann-Whitney on a small known case") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{4, 5, 6};
  const auto r = mann_whitney_u(a, b);
  CHECK(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p_value == doctest::Approx(0.1));
}

TEST_CASE("strict domination is significant") {
  std::vector<double> opt, rnd;
  for (int i = 0; i < 5; ++i) opt.push_back(0.1 + 0.01 * i);
  for (int i = 0; i < 100; ++i) rnd.push_back(1.0 + 0.01 * i);
  const auto r = mann_whitney_u(opt, rnd);
  CHECK(r.u == 0.0);
  CHECK(r.p_value < 0.05);
  const auto s = compare_to_random(opt, rnd, 1);
  CHECK(s.median_optimized == doctest::Approx(0.12));
  CHECK(s.median_random == doctest::Approx(1.495));
  CHECK(s.vs_all.p_value < 0.05);
}

TEST_CASE("identical distributions are rarely significant") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  int not_significant = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(20), b(30);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    if (mann_whitney_u(a, b).p_value > 0.01) ++not_significant;
  }
  CHECK(not_significant >= 0.95 * trials);
}

TEST_CASE("ties use the normal approximation") {
  const std::vector<double> a{1, 1, 2, 2, 3};
  const std::vector<double> b{2, 3, 3, 4, 4};
  const auto r = mann_whitney_u(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value < 1.0);
  CHECK_THROWS(mann_whitney_u(std::vector<double>{}, b));
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("random search reports totals as sums of partials") {
  const ReportObjective obj = [](const Eigen::VectorXd& k) {
    return make_report({{"a", k(0)}, {"b", 2.0 * k(1)}});
  };
  const auto one = random_search(obj, 2, 1, 7);
  REQUIRE(one.reports.size() == 1);
  CHECK(one.reports[0].total == doctest::Approx(one.designs[0](0) + 2.0 * one.designs[0](1)));
  const auto many = random_search(obj, 2, 50, 7);
  CHECK(many.designs[0] == one.designs[0]);
  for (const auto& d : many.designs) {
    CHECK(d.minCoeff() >= 1.0);
    CHECK(d.maxCoeff() <= 10.0);
  }
  CHECK(many.totals().size() == 50);
}
