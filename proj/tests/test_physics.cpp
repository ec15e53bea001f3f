#include "grain/packing.hpp"
#include "grain/physics.hpp"
#include "grain/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace grain;

TEST_CASE("effective stiffness") {
  CHECK(effective_stiffness(5.0, 5.0) == doctest::Approx(5.0));
  CHECK(effective_stiffness(2.0, 6.0) == doctest::Approx(1.5));
  CHECK(effective_stiffness(4.0, 4.0 + 1e-12) == doctest::Approx(2.0));
  CHECK_THROWS_AS(effective_stiffness(0.0, 3.0), DomainError);
  CHECK_THROWS_AS(effective_stiffness(3.0, -1.0), DomainError);

  const auto [di, dj] = effective_stiffness_partials(2.0, 6.0);
  CHECK(di == doctest::Approx(36.0 / 64.0));
  CHECK(dj == doctest::Approx(4.0 / 64.0));
}

TEST_CASE("pair potential") {
  CHECK(pair_potential(0.12, 0.1, 1.0, 2.5) == 0.0);
  CHECK(pair_potential(0.1, 0.1, 1.0, 2.5) == 0.0);
  CHECK(pair_potential(0.09, 0.1, 1.0, 2.5) == doctest::Approx(0.4 * std::pow(0.1, 2.5)).epsilon(1e-12));
  CHECK(pair_potential(0.09, 0.1, 1.0, 2.5) == doctest::Approx(1.2649e-3).epsilon(1e-4));
}

TEST_CASE("pair force is minus the derivative of the potential") {
  const double sigma = 0.1, eps = 3.0, alpha = 2.5, h = 1e-9;
  for (double r : {0.06, 0.08, 0.095, 0.0999}) {
    const double fd = -(pair_potential(r + h, sigma, eps, alpha) - pair_potential(r - h, sigma, eps, alpha)) / (2 * h);
    CHECK(pair_force_magnitude(r, sigma, eps, alpha) == doctest::Approx(fd).epsilon(1e-6));
  }
  const Vec2d a(0.0, 0.0), b(0.2, 0.0), c(0.09, 0.0);
  CHECK(pair_force_2d(a, b, sigma, eps, alpha).norm() == 0.0);
  const Vec2d f = pair_force_2d(a, c, sigma, eps, alpha);
  CHECK(f.x() < 0.0);
  CHECK(f.y() == 0.0);
}

TEST_CASE("wall force") {
  const Vec2d lower(0.0, 0.0), upper(10.0, 10.0);
  CHECK(wall_force(Vec2d(5.0, 5.0), lower, upper, 0.1, 5.0, 2.5).norm() == 0.0);
  const Vec2d f = wall_force(Vec2d(0.04, 5.0), lower, upper, 0.1, 5.0, 2.5);
  CHECK(f.x() > 0.0);
  CHECK(f.y() == 0.0);
}

TEST_CASE("total forces and energy") {
  PackingGeometry g;
  g.lower = Vec2d(0, 0);
  g.upper = Vec2d(10, 10);
  g.nx = 1;
  g.ny = 1;
  g.equilibrium.resize(1, 2);
  g.equilibrium << 5.0, 5.0;
  auto params = MaterialParams::uniform(1, 5.0);

  SUBCASE("single particle feels only background drag") {
    ParticleState s = ParticleState::at_rest(g.equilibrium);
    s.velocities << 0.3, -0.2;
    const Coordsd f = total_forces(s, params, g, DampingParams{});
    CHECK(f(0, 0) == doctest::Approx(-0.3));
    CHECK(f(0, 1) == doctest::Approx(0.2));
  }

  SUBCASE("undamped forces equal the conservative sum") {
    PackingGeometry g2 = g;
    g2.equilibrium.resize(2, 2);
    g2.equilibrium << 5.0, 5.0, 5.08, 5.01;
    auto p2 = MaterialParams::uniform(2, 4.0);
    ParticleState s = ParticleState::at_rest(g2.equilibrium);
    const Coordsd f = total_forces(s, p2, g2, DampingParams{0.0, 0.0, 0.0});
    const Vec2d expected = pair_force_2d<double>(g2.equilibrium.row(0).transpose(),
                                                 g2.equilibrium.row(1).transpose(), 0.1, 4.0, 2.5);
    CHECK(f(0, 0) == doctest::Approx(expected.x()));
    CHECK(f(0, 1) == doctest::Approx(expected.y()));
    CHECK(f(1, 0) == doctest::Approx(-expected.x()));

    const auto e = total_energy(s, p2, g2);
    CHECK(e.kinetic == 0.0);
    const double r = (g2.equilibrium.row(0) - g2.equilibrium.row(1)).norm();
    CHECK(e.potential == doctest::Approx(pair_potential(r, 0.1, 4.0, 2.5)));
  }

  SUBCASE("no overlap, zero velocity") {
    ParticleState s = ParticleState::at_rest(g.equilibrium);
    CHECK(total_forces(s, params, g, DampingParams{}).norm() == 0.0);
    CHECK(total_energy(s, params, g).total() == 0.0);
  }
}

TEST_CASE("clamp stiffness") {
  Eigen::VectorXd k(4);
  k << -3.0, 0.5, 5.0, 12.0;
  const Eigen::VectorXd c = clamp_stiffness(k);
  CHECK(c(0) == 1.0);
  CHECK(c(1) == 1.0);
  CHECK(c(2) == 5.0);
  CHECK(c(3) == 10.0);
}

TEST_CASE("cell list agrees with all pairs") {
  Rng rng = make_stream(3, "test");
  auto cfg = random_contact_configuration(rng, 20);
  const auto a = candidate_pairs(cfg.positions, 0.15, NeighborSearch::all_pairs, cfg.geometry.lower, cfg.geometry.upper);
  const auto b = candidate_pairs(cfg.positions, 0.15, NeighborSearch::cell_list, cfg.geometry.lower, cfg.geometry.upper);
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}

TEST_CASE("force matches finite differences of the potential") {
  const auto r = check_force_fd(20, 11);
  CHECK_MESSAGE(r.passed, r.detail);
  CHECK(r.value < 1e-5);
}

TEST_CASE("a sign error in the wall force is caught by the finite-difference check") {
  ForceFunction broken = [](const Coordsd& x, const MaterialParams& params, const PackingGeometry& geometry,
                            Coordsd& out) {
    reference_force()(x, params, geometry, out);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vec2d w = wall_force<double>(x.row(i).transpose(), geometry.lower, geometry.upper, params.diameter,
                                         params.stiffness(i), params.alpha);
      out.row(i) -= 2.0 * w.transpose();
    }
  };
  const auto r = check_force_fd(20, 11, broken);
  CHECK_FALSE(r.passed);
}
