#include "grain/verify.hpp"

#include <doctest.h>

using namespace grain;

TEST_CASE("energy is conserved at second order") {
  const auto r = check_energy_conservation(5e-3, 3000, 1e-3);
  CHECK_MESSAGE(r.passed, r.detail);
}

TEST_CASE("integrator is second order") {
  const auto r = check_integrator_order({5e-3, 2.5e-3, 1.25e-3}, 2.0);
  CHECK_MESSAGE(r.passed, r.detail);
}

TEST_CASE("loss identities") {
  const auto r = check_loss_identities();
  CHECK_MESSAGE(r.passed, r.detail);
}
