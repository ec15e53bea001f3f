#include "grain/packing.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace grain {

void LatticeSpec::validate() const {
  if (nx < 2 || ny < 2) throw ConfigError("lattice needs at least 2x2 particles");
  if (!(diameter > 0.0)) throw ConfigError("diameter must be positive");
  if (!(packing_fraction > 0.0 && packing_fraction < kHexagonalClosePacking))
    throw ConfigError("packing fraction must lie in (0, 0.9069)");
}

void FireConfig::validate() const {
  if (!(force_tol > 0.0)) throw ConfigError("FIRE force tolerance must be positive");
  if (!(f_inc > 1.0 && f_dec < 1.0 && f_dec > 0.0)) throw ConfigError("FIRE requires f_inc > 1 > f_dec > 0");
  if (!(dt_initial > 0.0 && dt_max >= dt_initial)) throw ConfigError("FIRE time steps are inconsistent");
  if (!(alpha_start > 0.0 && alpha_start < 1.0)) throw ConfigError("FIRE alpha_start must lie in (0, 1)");
  if (n_min < 0 || max_steps <= 0) throw ConfigError("FIRE step counts must be positive");
}

double packing_fraction(Eigen::Index n, double diameter, const PackingGeometry& geometry) {
  const double particle_area = static_cast<double>(n) * std::numbers::pi * diameter * diameter / 4.0;
  return particle_area / geometry.area();
}

PackingGeometry hexagonal_lattice(const LatticeSpec& spec) {
  spec.validate();
  const double row_height = std::sqrt(3.0) / 2.0;
  const double width_units = spec.nx + 0.5;
  const double height_units = (spec.ny - 1) * row_height + 1.0;
  const auto n = static_cast<double>(spec.nx) * spec.ny;
  const double a = std::sqrt(n * std::numbers::pi * spec.diameter * spec.diameter /
                             (4.0 * spec.packing_fraction * width_units * height_units));

  PackingGeometry g;
  g.nx = spec.nx;
  g.ny = spec.ny;
  g.lower = Vec2d::Zero();
  g.upper = Vec2d(width_units * a, height_units * a);
  g.equilibrium.resize(spec.nx * spec.ny, 2);
  for (int row = 0; row < spec.ny; ++row) {
    const double shift = (row % 2) ? 0.5 * a : 0.0;
    for (int col = 0; col < spec.nx; ++col) {
      g.equilibrium(g.index(row, col), 0) = 0.5 * a + col * a + shift;
      g.equilibrium(g.index(row, col), 1) = 0.5 * a + row * row_height * a;
    }
  }
  return g;
}

double max_force(ForceField& field, const Coordsd& x) {
  Coordsd f;
  field.conservative(x, f);
  return f.rowwise().norm().maxCoeff();
}

FireResult fire_minimize(const ParticleState& state, const MaterialParams& params, const PackingGeometry& geometry,
                         const FireConfig& config, NeighborSearch search) {
  config.validate();
  params.validate();
  ForceField field(params, geometry, DampingParams{0.0, 0.0, 0.0}, search);

  Coordsd x = state.positions;
  Coordsd v = Coordsd::Zero(x.rows(), 2);
  Coordsd f;
  field.conservative(x, f);

  double dt = config.dt_initial;
  double mix = config.alpha_start;
  int n_positive = 0;

  for (long it = 0;; ++it) {
    const double residual = f.rowwise().norm().maxCoeff();
    if (!std::isfinite(residual)) throw SimulationFailure("FIRE produced non-finite forces", it);
    if (residual < config.force_tol) {
      FireResult out;
      out.state = ParticleState::at_rest(x);
      out.state.time = state.time;
      out.iterations = it;
      out.residual = residual;
      return out;
    }
    if (it >= config.max_steps) throw NonConvergence("FIRE did not converge", residual);

    const double power = (f.array() * v.array()).sum();
    if (power > 0.0) {
      const double vnorm = v.norm();
      const double fnorm = f.norm();
      v = (1.0 - mix) * v + (mix * vnorm / fnorm) * f;
      if (++n_positive > config.n_min) {
        dt = std::min(dt * config.f_inc, config.dt_max);
        mix *= config.f_alpha;
      }
    } else {
      v.setZero();
      dt *= config.f_dec;
      mix = config.alpha_start;
      n_positive = 0;
    }

    v += (dt / params.mass) * f;
    x += dt * v;
    field.conservative(x, f);
  }
}

namespace {

double contact_free_diameter(const Coordsd& x, const PackingGeometry& g) {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) d = std::min(d, (x.row(i) - x.row(j)).norm());
    for (int a = 0; a < 2; ++a) {
      d = std::min(d, 2.0 * (x(i, a) - g.lower[a]));
      d = std::min(d, 2.0 * (g.upper[a] - x(i, a)));
    }
  }
  return d;
}

}  // namespace

PackingGeometry compression_protocol(const PackingGeometry& geometry, const MaterialParams& params,
                                     double target_phi, const FireConfig& fire, const CompressionConfig& compression,
                                     CompressionReport* report) {
  if (!(target_phi > 0.0 && target_phi < kHexagonalClosePacking))
    throw ConfigError("target packing fraction must lie in (0, 0.9069)");
  params.validate();
  const Eigen::Index n = geometry.size();
  if (params.size() != n) throw ConfigError("stiffness vector does not match particle count");

  const double target_d = std::sqrt(4.0 * target_phi * geometry.area() / (static_cast<double>(n) * std::numbers::pi));
  Coordsd x = geometry.equilibrium;
  double d = std::min(target_d, contact_free_diameter(x, geometry));
  if (!(d > 0.0)) throw SimulationFailure("particles lie on a wall or on top of each other", 0);

  CompressionReport rep;
  MaterialParams p = params;
  double step = compression.step;
  while (d < target_d) {
    if (rep.outer_steps >= compression.max_outer)
      throw NonConvergence("compression protocol exceeded its outer step budget", target_d - d);
    const double trial = std::min(d * (1.0 + step), target_d);
    p.diameter = trial;
    try {
      FireResult r = fire_minimize(ParticleState::at_rest(x), p, geometry, fire);
      rep.fire_iterations += r.iterations;
      x = r.state.positions;
      d = trial;
    } catch (const NonConvergence&) {
      step *= 0.5;
      if (step < 1e-9) throw;
    }
    ++rep.outer_steps;
  }

  // Rescale so the particles carry the requested diameter; uniform scaling
  // preserves force balance.
  const double scale = params.diameter / d;
  PackingGeometry out = geometry;
  out.lower = geometry.lower * scale;
  out.upper = geometry.upper * scale;
  FireResult final_state = fire_minimize(ParticleState::at_rest(x * scale), params, out, fire);
  rep.fire_iterations += final_state.iterations;
  out.equilibrium = final_state.state.positions;
  rep.residual = final_state.residual;
  rep.packing_fraction = packing_fraction(n, params.diameter, out);
  if (std::abs(rep.packing_fraction - target_phi) >= 1e-6)
    throw NonConvergence("packing fraction missed its target", rep.packing_fraction - target_phi);
  if (report) *report = rep;
  return out;
}

PackingGeometry generate_packing(const LatticeSpec& spec, const MaterialParams& params, const FireConfig& fire,
                                 CompressionReport* report, const CompressionConfig& compression) {
  PackingGeometry lattice = hexagonal_lattice(spec);
  MaterialParams p = params;
  p.diameter = spec.diameter;
  return compression_protocol(lattice, p, spec.packing_fraction, fire, compression, report);
}

Eigen::VectorXi contact_numbers(const Coordsd& x, const MaterialParams& params, const PackingGeometry& geometry) {
  ForceField field(params, geometry, DampingParams{0.0, 0.0, 0.0}, NeighborSearch::all_pairs);
  Eigen::VectorXi z = Eigen::VectorXi::Zero(x.rows());
  for (const auto& [i, j] : field.pairs(x)) {
    if ((x.row(i) - x.row(j)).norm() < params.diameter) {
      ++z[i];
      ++z[j];
    }
  }
  return z;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("failed to format number");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  if (first < last && *first == '+') ++first;
  auto [end, ec] = std::from_chars(first, last, v);
  while (end < last && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (ec != std::errc() || end != last) throw ConfigError("not a number: '" + s + "'");
  return v;
}

void write_snapshot(std::ostream& out, const PackingSnapshot& snap) {
  const auto& g = snap.geometry;
  if (snap.stiffness.size() != g.size()) throw ConfigError("snapshot stiffness does not match particle count");
  out << "# granular packing snapshot\n";
  out << "n " << g.size() << '\n';
  out << "lattice " << g.nx << ' ' << g.ny << '\n';
  out << "lower " << format_double(g.lower.x()) << ' ' << format_double(g.lower.y()) << '\n';
  out << "upper " << format_double(g.upper.x()) << ' ' << format_double(g.upper.y()) << '\n';
  out << "phi " << format_double(snap.packing_fraction) << '\n';
  out << "sigma " << format_double(snap.diameter) << '\n';
  out << "index x y k\n";
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    out << i << ' ' << format_double(g.equilibrium(i, 0)) << ' ' << format_double(g.equilibrium(i, 1)) << ' '
        << format_double(snap.stiffness[i]) << '\n';
  }
}

void write_snapshot(const std::string& path, const PackingSnapshot& snap) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write snapshot: " + path);
  write_snapshot(out, snap);
}

PackingSnapshot read_snapshot(std::istream& in) {
  PackingSnapshot snap;
  long n = -1;
  std::string line;
  bool body = false;
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!body) {
      std::string key;
      ls >> key;
      std::string a, b;
      if (key == "n") {
        ls >> n;
      } else if (key == "lattice") {
        ls >> snap.geometry.nx >> snap.geometry.ny;
      } else if (key == "lower" || key == "upper") {
        ls >> a >> b;
        Vec2d& v = key == "lower" ? snap.geometry.lower : snap.geometry.upper;
        v = Vec2d(parse_double(a), parse_double(b));
      } else if (key == "phi") {
        ls >> a;
        snap.packing_fraction = parse_double(a);
      } else if (key == "sigma") {
        ls >> a;
        snap.diameter = parse_double(a);
      } else if (key == "index") {
        if (n < 0) throw ConfigError("snapshot header lacks particle count");
        snap.geometry.equilibrium.resize(n, 2);
        snap.stiffness.resize(n);
        body = true;
      } else {
        throw ConfigError("unknown snapshot header key: " + key);
      }
      if (ls.fail()) throw ConfigError("malformed snapshot header line: " + line);
      continue;
    }
    long idx = -1;
    std::string xs, ys, ks;
    ls >> idx >> xs >> ys >> ks;
    if (ls.fail() || idx != row || row >= n) throw ConfigError("malformed snapshot particle line: " + line);
    snap.geometry.equilibrium(row, 0) = parse_double(xs);
    snap.geometry.equilibrium(row, 1) = parse_double(ys);
    snap.stiffness[row] = parse_double(ks);
    ++row;
  }
  if (!body || row != n) throw ConfigError("snapshot is truncated");
  return snap;
}

PackingSnapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read snapshot: " + path);
  return read_snapshot(in);
}

}  // namespace grain
