#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pbf/field.hpp"
#include "pbf/material.hpp"
#include "pbf/path.hpp"

namespace pbf {

enum class Face { XMin = 0, XMax = 1, YMin = 2, YMax = 3, ZMin = 4, ZMax = 5 };

constexpr std::array<Face, 6> kAllFaces = {Face::XMin, Face::XMax, Face::YMin,
                                           Face::YMax, Face::ZMin, Face::ZMax};

struct FaceCondition {
  enum class Kind { Dirichlet, Insulated, Convective } kind = Kind::Insulated;
  double value = 300.0;    // Dirichlet temperature
  double h = 10.0;         // convective coefficient W/(m^2 K)
  double t_inf = 300.0;    // ambient temperature

  static FaceCondition dirichlet(double temperature) {
    return {Kind::Dirichlet, temperature, 0.0, 0.0};
  }
  static FaceCondition insulated() { return {Kind::Insulated, 0.0, 0.0, 0.0}; }
  static FaceCondition convective(double h, double t_inf) {
    return {Kind::Convective, 0.0, h, t_inf};
  }
};

// One condition per face. Default set: top convective (h=10, 300 K),
// bottom Dirichlet 300 K, four sides insulated.
struct BoundarySpec {
  std::array<FaceCondition, 6> faces;

  BoundarySpec() {
    for (FaceCondition& f : faces) f = FaceCondition::insulated();
    faces[static_cast<int>(Face::ZMax)] = FaceCondition::convective(10.0, 300.0);
    faces[static_cast<int>(Face::ZMin)] = FaceCondition::dirichlet(300.0);
  }
  FaceCondition& operator[](Face f) { return faces[static_cast<int>(f)]; }
  const FaceCondition& operator[](Face f) const { return faces[static_cast<int>(f)]; }
};

// Largest stable forward-Euler step, derated by `safety`, using the worst
// diffusivity over [300 K, 4000 K] (1 K scan).
double stable_dt(const Grid& grid, const MaterialParams& material, double safety);

// One forward-Euler step of the nonlinear heat equation. Interior nodes get
// the 7-point stencil with nodal-conductivity gradient terms; faces are then
// reimposed by apply_boundary. The heat source is optional (nullptr = off).
// Throws on NaN/Inf, naming the first offending node.
TemperatureField step(const TemperatureField& field, double dt, const Scenario* scenario,
                      const LaserParams* laser, const MaterialParams& material,
                      const BoundarySpec& bc);

// Reimposes the boundary conditions on the face nodes in place. Insulated
// faces copy the adjacent interior node; convective faces solve the
// one-sided first-order flux balance; Dirichlet faces are set last so they
// win on edges and corners.
void apply_boundary(TemperatureField& field, const BoundarySpec& bc,
                    const MaterialParams& material);

struct FdConfig {
  Grid grid;
  MaterialParams material;
  LaserParams laser;
  BoundarySpec bc;
  double initial_temperature = 300.0;
  double safety = 0.9;
  double end_time = 0.0;
  std::vector<double> snapshot_times;
  bool laser_active = true;
};

struct FdResult {
  std::vector<TemperatureField> snapshots;
  double dt = 0.0;
  std::size_t steps = 0;
};

// Marches from a uniform initial field to end_time, emitting snapshots at
// the nearest step to each requested time (no interpolation). Deterministic:
// identical config gives bit-identical output.
FdResult solve(const FdConfig& config, const Scenario& scenario);

}  // namespace pbf
