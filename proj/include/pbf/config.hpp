#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbf/evaluation.hpp"
#include "pbf/fd_solver.hpp"
#include "pbf/operator_net.hpp"
#include "pbf/pinn.hpp"

namespace pbf {

struct GeometryConfig {
  Eigen::Vector3d size{2e-3, 2e-3, 0.5e-3};
  Eigen::Vector3d origin{-1e-3, -1e-3, -0.5e-3};  // top surface at z = 0
  std::vector<Track> tracks;                      // default: three parallel tracks

  SpaceTimeBox domain_box(double t_begin, double t_end) const;
};

struct SolverConfig {
  int nx = 41, ny = 41, nz = 11;
  double safety = 0.9;
  std::vector<double> snapshot_times;  // empty: per-track end times

  Grid make_grid(const GeometryConfig& geometry) const;
};

struct SimulationConfig {
  double initial_temperature = 300.0;
  double end_time = -1.0;  // < 0: scan duration (+ cooling when enabled)
};

struct SequentialConfig {
  bool cooling = true;
  double cooling_time = -1.0;  // < 0: one full scan duration
};

struct EvaluationConfig {
  double melt_threshold = 1600.0;
  std::vector<Eigen::Vector3d> history_probes;
  std::vector<double> history_times;
};

// The resolved run configuration: parsed strictly (unknown keys are
// rejected naming the offending path), all defaults filled in.
struct RunConfig {
  std::uint64_t seed = 42;
  int threads = 0;  // 0: hardware count
  MaterialParams material;
  LaserParams laser;
  GeometryConfig geometry;
  std::vector<std::vector<int>> scenarios;  // resolved permutations
  SolverConfig solver;
  BoundarySpec bc;
  TrainingConfig training;
  OperatorConfig op;
  SequentialConfig sequential;
  SimulationConfig simulation;
  EvaluationConfig evaluation;

  double per_track_duration() const;
  double scan_duration(const std::vector<int>& order) const;
  double cooling_duration() const;  // resolved (>= 0)
  Scenario scenario(const std::vector<int>& order) const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::filesystem::path& file);

// resolved config (defaults filled); reparsing it yields the same RunConfig
nlohmann::json to_json(const RunConfig& config);

// FNV-1a over the canonical dump of the resolved config
std::string config_hash(const RunConfig& config);

// run manifest: command, resolved config + hash, produced artifacts
void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& artifacts,
                    const std::filesystem::path& out_dir);

}  // namespace pbf
