#pragma once

#include "grain/experiment.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace grain {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity
  double tolerance = 0.0;  // bound it was compared against
  std::string detail;
};

/// Conservative force evaluator under test; the default is ForceField.
using ForceFunction =
    std::function<void(const Coordsd& x, const MaterialParams& params, const PackingGeometry& geometry, Coordsd& out)>;

ForceFunction reference_force();

/// Random in-contact configuration: n particles on a jittered compressed
/// lattice inside walls that touch the outer rows, distinct random stiffness.
struct RandomConfiguration {
  MaterialParams params;
  PackingGeometry geometry;
  Coordsd positions;
};
RandomConfiguration random_contact_configuration(Rng& rng, int n);

/// Every force component against the central difference of the total
/// potential with step h = 1e-7 sigma, over `configs` random configurations.
CheckResult check_force_fd(int configs, std::uint64_t seed, const ForceFunction& force = {}, double tol = 1e-5);

/// 3x3 jammed packing, undamped and undriven, started from a perturbation of
/// its equilibrium.
struct ConservationSetup {
  MaterialParams params;
  PackingGeometry geometry;
  Coordsd start;
};
ConservationSetup conservation_setup(std::uint64_t seed = 7);

/// Peak |E(t) - E(0)| / E(0) over n_steps.
double energy_drift(const ConservationSetup& setup, double dt, long n_steps);

/// Drift at dt below `tol`, and drift(dt) / drift(dt / 2) inside [3, 5].
CheckResult check_energy_conservation(double dt = 5e-3, long n_steps = 10000, double tol = 1e-3);

/// Final-position error against a run with the smallest step divided by 16;
/// least-squares log-log slope over the given steps must be 2 +- 0.2.
CheckResult check_integrator_order(std::vector<double> dts = {5e-3, 2.5e-3, 1.25e-3}, double t_end = 5.0);

/// Two overlapping particles in a large box relax to separation sigma.
CheckResult check_fire_two_body();

/// Two-particle chain: particle 0 driven, particle 1 free; MAE loss on the
/// free particle against a scaled sinusoid.
struct ChainSetup {
  MaterialParams params;
  PackingGeometry geometry;
  SimConfig sim;
  Experiment experiment;
};
ChainSetup chain_setup(long n_steps = 50);

CheckResult check_adjoint_chain(long n_steps = 50, double h = 1e-6, double tol = 1e-4);

/// AND-gate MAE experiment on a jammed nx x ny packing with random distinct
/// stiffness; compares every component (or `components` of them).
CheckResult check_adjoint_lattice(int nx, int ny, double phi, long n_steps, std::uint64_t seed, double h = 1e-6,
                                  double tol = 1e-4, int components = -1);

/// Cross-entropy, MAE and spectral gain identities.
CheckResult check_loss_identities();

struct VerifyOptions {
  ForceFunction force;  // empty selects the reference implementation
  std::uint64_t seed = 1;
};

std::vector<CheckResult> run_verification_suite(const VerifyOptions& options = {});

}  // namespace grain
