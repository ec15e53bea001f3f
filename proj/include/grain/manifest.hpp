#pragma once

#include "grain/evolve.hpp"
#include "grain/optim.hpp"
#include "grain/packing.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace grain {

inline constexpr const char* kCodeVersion = "grain 1.0.0";

struct RandomSearchConfig {
  int configurations = 100;
  double lo = MaterialParams::k_min;
  double hi = MaterialParams::k_max;
};

/// Everything needed to reproduce a run. Serialized as INI with the sections
/// [run] [experiment] [lattice] [physics] [fire] [sim] [train] [evo]
/// [random_search]; see README for the key list.
struct RunManifest {
  std::string name = "custom";
  std::uint64_t seed = 0;
  int trials = 1;
  std::string output_dir = "runs/custom";
  std::string code_version = kCodeVersion;

  ExperimentSpec experiment;
  bool default_ports = true;  // derive ports from the lattice instead of the explicit lists

  LatticeSpec lattice;
  std::string snapshot;  // optional packing snapshot to load instead of generating one
  double mass = 1.0;
  double alpha = 2.5;
  double packing_stiffness = 5.0;  // uniform stiffness used while generating the packing

  FireConfig fire;
  CompressionConfig compression;
  SimConfig sim;
  TrainConfig train;
  EvoConfig evo;
  RandomSearchConfig random_search;

  void validate() const;
};

RunManifest read_manifest(std::istream& in);
RunManifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Directory holding the shipped presets.
std::filesystem::path preset_directory();
/// Loads presets/<name>.ini; name is one of waveguide, and, xor or a desk_ variant.
RunManifest load_preset(const std::string& name);

/// Geometry and packing params for a manifest: loads the snapshot when given,
/// otherwise generates the packing. Ports are filled in when default_ports is set.
struct PreparedRun {
  MaterialParams params;  // stiffness initialized to the packing stiffness
  PackingGeometry geometry;
  ExperimentSpec experiment;
  CompressionReport packing_report;
};

PreparedRun prepare(const RunManifest& manifest);

}  // namespace grain
