#include "grain/manifest.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace grain {

namespace pt = boost::property_tree;

namespace {

template <class T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(values[i]);
    else
      s += std::to_string(values[i]);
  }
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

/// Typed access to one section that remembers which keys were read so that
/// misspelled keys are reported instead of silently ignored.
class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : name_(std::move(name)) {
    if (auto child = tree.get_child_optional(name_)) node_ = &*child;
  }
  ~Section() = default;

  bool present() const { return node_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!node_) return std::nullopt;
    auto v = node_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  void get(const std::string& key, double& dst) {
    if (auto v = raw(key)) dst = to_double(key, *v);
  }
  void get(const std::string& key, int& dst) {
    if (auto v = raw(key)) dst = static_cast<int>(to_long(key, *v));
  }
  void get(const std::string& key, long& dst) {
    if (auto v = raw(key)) dst = to_long(key, *v);
  }
  void get(const std::string& key, std::uint64_t& dst) {
    if (auto v = raw(key)) {
      try {
        std::size_t pos = 0;
        dst = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
      } catch (const std::exception&) {
        throw ConfigError(where(key) + ": expected an unsigned integer, got '" + *v + "'");
      }
    }
  }
  void get(const std::string& key, bool& dst) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "1") dst = true;
      else if (*v == "false" || *v == "0") dst = false;
      else throw ConfigError(where(key) + ": expected true or false, got '" + *v + "'");
    }
  }
  void get(const std::string& key, std::string& dst) {
    if (auto v = raw(key)) dst = *v;
  }
  void get(const std::string& key, std::vector<double>& dst) {
    if (auto v = raw(key)) {
      dst.clear();
      for (const auto& item : split_list(*v)) dst.push_back(to_double(key, item));
    }
  }
  void get(const std::string& key, std::vector<int>& dst) {
    if (auto v = raw(key)) {
      dst.clear();
      for (const auto& item : split_list(*v)) dst.push_back(static_cast<int>(to_long(key, item)));
    }
  }

  void check_unknown() const {
    if (!node_) return;
    for (const auto& [key, value] : *node_)
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
  }

 private:
  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }
  double to_double(const std::string& key, const std::string& v) const {
    try {
      return parse_double(v);
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected a number, got '" + v + "'");
    }
  }
  long to_long(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const long x = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected an integer, got '" + v + "'");
    }
  }

  std::string name_;
  const pt::ptree* node_ = nullptr;
  std::set<std::string> used_;
};

std::string search_name(NeighborSearch s) { return s == NeighborSearch::all_pairs ? "all_pairs" : "cell_list"; }

NeighborSearch parse_search(const std::string& s) {
  if (s == "all_pairs") return NeighborSearch::all_pairs;
  if (s == "cell_list") return NeighborSearch::cell_list;
  throw ConfigError("unknown neighbor search: " + s);
}

}  // namespace

void RunManifest::validate() const {
  if (trials < 1) throw ConfigError("run.trials must be >= 1");
  lattice.validate();
  fire.validate();
  sim.validate();
  train.validate();
  evo.validate();
  if (!(mass > 0.0)) throw ConfigError("physics.mass must be positive");
  if (!(alpha > 1.0)) throw ConfigError("physics.alpha must exceed 1");
  if (!(packing_stiffness >= MaterialParams::k_min && packing_stiffness <= MaterialParams::k_max))
    throw ConfigError("physics.packing_stiffness outside the stiffness bounds");
  if (random_search.configurations < 1) throw ConfigError("random_search.configurations must be >= 1");
  if (!(random_search.lo > 0.0 && random_search.lo < random_search.hi))
    throw ConfigError("random_search bounds must satisfy 0 < lo < hi");
  if (!default_ports) experiment.validate(static_cast<Eigen::Index>(lattice.nx) * lattice.ny);
}

RunManifest read_manifest(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  static const std::set<std::string> known{"run",  "experiment", "lattice", "physics",      "fire",
                                           "sim",  "train",      "evo",     "random_search"};
  for (const auto& [name, node] : tree)
    if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");

  RunManifest m;
  {
    Section s(tree, "run");
    s.get("name", m.name);
    s.get("seed", m.seed);
    s.get("trials", m.trials);
    s.get("output_dir", m.output_dir);
    s.get("code_version", m.code_version);
    s.check_unknown();
  }
  {
    Section s(tree, "experiment");
    std::string kind = to_string(m.experiment.kind);
    s.get("kind", kind);
    m.experiment = default_spec(parse_task(kind));
    std::string loss = to_string(m.experiment.loss);
    s.get("loss", loss);
    m.experiment.loss = parse_loss(loss);
    s.get("frequencies", m.experiment.frequencies);
    s.get("amplitude", m.experiment.amplitude);
    s.get("intensity_window", m.experiment.intensity_window);
    s.get("mae_window", m.experiment.mae_window);
    s.get("default_ports", m.default_ports);
    s.get("inputs", m.experiment.inputs);
    s.get("outputs", m.experiment.outputs);
    s.check_unknown();
  }
  {
    Section s(tree, "lattice");
    s.get("nx", m.lattice.nx);
    s.get("ny", m.lattice.ny);
    s.get("diameter", m.lattice.diameter);
    s.get("packing_fraction", m.lattice.packing_fraction);
    s.get("snapshot", m.snapshot);
    s.get("compression_step", m.compression.step);
    s.get("compression_max_outer", m.compression.max_outer);
    s.check_unknown();
  }
  {
    Section s(tree, "physics");
    s.get("mass", m.mass);
    s.get("alpha", m.alpha);
    s.get("packing_stiffness", m.packing_stiffness);
    std::string search = search_name(m.sim.search);
    s.get("neighbor_search", search);
    m.sim.search = parse_search(search);
    s.get("background_damping", m.sim.damping.background);
    s.get("particle_damping", m.sim.damping.particle_particle);
    s.get("wall_damping", m.sim.damping.particle_wall);
    s.check_unknown();
  }
  {
    Section s(tree, "fire");
    s.get("dt_initial", m.fire.dt_initial);
    s.get("dt_max", m.fire.dt_max);
    s.get("f_inc", m.fire.f_inc);
    s.get("f_dec", m.fire.f_dec);
    s.get("alpha_start", m.fire.alpha_start);
    s.get("f_alpha", m.fire.f_alpha);
    s.get("n_min", m.fire.n_min);
    s.get("force_tol", m.fire.force_tol);
    s.get("max_steps", m.fire.max_steps);
    s.check_unknown();
  }
  {
    Section s(tree, "sim");
    s.get("n_steps", m.sim.n_steps);
    s.get("dt", m.sim.dt);
    s.get("record_stride", m.sim.record_stride);
    s.check_unknown();
  }
  {
    Section s(tree, "train");
    s.get("epochs", m.train.epochs);
    s.get("lr", m.train.lr);
    s.get("lr_milestones", m.train.lr_milestones);
    s.get("lr_gamma", m.train.lr_gamma);
    std::string init = m.train.init == InitKind::fixed ? "fixed" : "uniform_random";
    s.get("init", init);
    if (init == "fixed") m.train.init = InitKind::fixed;
    else if (init == "uniform_random") m.train.init = InitKind::uniform_random;
    else throw ConfigError("train.init must be fixed or uniform_random");
    s.get("init_value", m.train.init_value);
    s.get("init_lo", m.train.init_lo);
    s.get("init_hi", m.train.init_hi);
    s.get("k_min", m.train.k_min);
    s.get("k_max", m.train.k_max);
    s.get("snapshot_epochs", m.train.snapshot_epochs);
    s.check_unknown();
  }
  {
    Section s(tree, "evo");
    s.get("population", m.evo.population);
    s.get("generations", m.evo.generations);
    s.get("mutation_sigma", m.evo.mutation_sigma);
    s.get("crossover", m.evo.crossover);
    s.get("k_min", m.evo.k_min);
    s.get("k_max", m.evo.k_max);
    s.check_unknown();
  }
  {
    Section s(tree, "random_search");
    s.get("configurations", m.random_search.configurations);
    s.get("lo", m.random_search.lo);
    s.get("hi", m.random_search.hi);
    s.check_unknown();
  }
  m.train.seed = m.seed;
  m.evo.seed = m.seed;
  m.validate();
  return m;
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  return read_manifest(in);
}

void write_manifest(std::ostream& out, const RunManifest& m) {
  const auto b = [](bool v) { return v ? "true" : "false"; };
  const auto d = [](double v) { return format_double(v); };
  out << "[run]\n"
      << "name = " << m.name << "\n"
      << "seed = " << m.seed << "\n"
      << "trials = " << m.trials << "\n"
      << "output_dir = " << m.output_dir << "\n"
      << "code_version = " << m.code_version << "\n\n";
  out << "[experiment]\n"
      << "kind = " << to_string(m.experiment.kind) << "\n"
      << "loss = " << to_string(m.experiment.loss) << "\n"
      << "frequencies = " << join(m.experiment.frequencies) << "\n"
      << "amplitude = " << d(m.experiment.amplitude) << "\n"
      << "intensity_window = " << d(m.experiment.intensity_window) << "\n"
      << "mae_window = " << d(m.experiment.mae_window) << "\n"
      << "default_ports = " << b(m.default_ports) << "\n";
  if (!m.default_ports)
    out << "inputs = " << join(m.experiment.inputs) << "\n"
        << "outputs = " << join(m.experiment.outputs) << "\n";
  out << "\n[lattice]\n"
      << "nx = " << m.lattice.nx << "\n"
      << "ny = " << m.lattice.ny << "\n"
      << "diameter = " << d(m.lattice.diameter) << "\n"
      << "packing_fraction = " << d(m.lattice.packing_fraction) << "\n";
  if (!m.snapshot.empty()) out << "snapshot = " << m.snapshot << "\n";
  out << "compression_step = " << d(m.compression.step) << "\n"
      << "compression_max_outer = " << m.compression.max_outer << "\n\n";
  out << "[physics]\n"
      << "mass = " << d(m.mass) << "\n"
      << "alpha = " << d(m.alpha) << "\n"
      << "packing_stiffness = " << d(m.packing_stiffness) << "\n"
      << "neighbor_search = " << search_name(m.sim.search) << "\n"
      << "background_damping = " << d(m.sim.damping.background) << "\n"
      << "particle_damping = " << d(m.sim.damping.particle_particle) << "\n"
      << "wall_damping = " << d(m.sim.damping.particle_wall) << "\n\n";
  out << "[fire]\n"
      << "dt_initial = " << d(m.fire.dt_initial) << "\n"
      << "dt_max = " << d(m.fire.dt_max) << "\n"
      << "f_inc = " << d(m.fire.f_inc) << "\n"
      << "f_dec = " << d(m.fire.f_dec) << "\n"
      << "alpha_start = " << d(m.fire.alpha_start) << "\n"
      << "f_alpha = " << d(m.fire.f_alpha) << "\n"
      << "n_min = " << m.fire.n_min << "\n"
      << "force_tol = " << d(m.fire.force_tol) << "\n"
      << "max_steps = " << m.fire.max_steps << "\n\n";
  out << "[sim]\n"
      << "n_steps = " << m.sim.n_steps << "\n"
      << "dt = " << d(m.sim.dt) << "\n"
      << "record_stride = " << m.sim.record_stride << "\n\n";
  out << "[train]\n"
      << "epochs = " << m.train.epochs << "\n"
      << "lr = " << d(m.train.lr) << "\n"
      << "lr_milestones = " << join(m.train.lr_milestones) << "\n"
      << "lr_gamma = " << d(m.train.lr_gamma) << "\n"
      << "init = " << (m.train.init == InitKind::fixed ? "fixed" : "uniform_random") << "\n"
      << "init_value = " << d(m.train.init_value) << "\n"
      << "init_lo = " << d(m.train.init_lo) << "\n"
      << "init_hi = " << d(m.train.init_hi) << "\n"
      << "k_min = " << d(m.train.k_min) << "\n"
      << "k_max = " << d(m.train.k_max) << "\n"
      << "snapshot_epochs = " << join(m.train.snapshot_epochs) << "\n\n";
  out << "[evo]\n"
      << "population = " << m.evo.population << "\n"
      << "generations = " << m.evo.generations << "\n"
      << "mutation_sigma = " << d(m.evo.mutation_sigma) << "\n"
      << "crossover = " << b(m.evo.crossover) << "\n"
      << "k_min = " << d(m.evo.k_min) << "\n"
      << "k_max = " << d(m.evo.k_max) << "\n\n";
  out << "[random_search]\n"
      << "configurations = " << m.random_search.configurations << "\n"
      << "lo = " << d(m.random_search.lo) << "\n"
      << "hi = " << d(m.random_search.hi) << "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  write_manifest(out, m);
}

std::filesystem::path preset_directory() {
#ifdef GRAIN_PRESET_DIR
  return GRAIN_PRESET_DIR;
#else
  return "presets";
#endif
}

RunManifest load_preset(const std::string& name) {
  const auto path = preset_directory() / (name + ".ini");
  if (!std::filesystem::exists(path)) throw ConfigError("unknown preset '" + name + "'");
  return read_manifest(path);
}

PreparedRun prepare(const RunManifest& m) {
  m.validate();
  PreparedRun run;
  const Eigen::Index n = static_cast<Eigen::Index>(m.lattice.nx) * m.lattice.ny;
  run.params = MaterialParams::uniform(n, m.packing_stiffness, m.mass, m.lattice.diameter, m.alpha);
  if (!m.snapshot.empty()) {
    PackingSnapshot snap = read_snapshot(m.snapshot);
    if (snap.geometry.size() != n) throw ConfigError("snapshot particle count does not match the lattice");
    run.geometry = snap.geometry;
    run.params.diameter = snap.diameter;
    run.packing_report.packing_fraction = snap.packing_fraction;
  } else {
    run.geometry = generate_packing(m.lattice, run.params, m.fire, &run.packing_report, m.compression);
  }
  run.experiment = m.experiment;
  if (m.default_ports) assign_default_ports(run.experiment, run.geometry);
  run.experiment.validate(n);
  return run;
}

}  // namespace grain
