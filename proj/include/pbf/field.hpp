#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace pbf {

// Regular rectilinear grid; node (i,j,k) sits at origin + (i*dx, j*dy, k*dz).
struct Grid {
  int nx = 0, ny = 0, nz = 0;
  double dx = 0.0, dy = 0.0, dz = 0.0;
  Eigen::Vector3d origin{0.0, 0.0, 0.0};

  void validate() const {
    if (nx < 3 || ny < 3 || nz < 3)
      throw std::invalid_argument("grid needs >= 3 nodes per axis");
    if (!(dx > 0.0 && dy > 0.0 && dz > 0.0))
      throw std::invalid_argument("grid spacings must be > 0");
  }

  std::size_t node_count() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  // row-major with x fastest
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(k) * ny * nx + static_cast<std::size_t>(j) * nx + i;
  }
  double x(int i) const { return origin.x() + i * dx; }
  double y(int j) const { return origin.y() + j * dy; }
  double z(int k) const { return origin.z() + k * dz; }
  Eigen::Vector3d max_corner() const {
    return origin + Eigen::Vector3d((nx - 1) * dx, (ny - 1) * dy, (nz - 1) * dz);
  }

  bool same_layout(const Grid& other) const {
    return nx == other.nx && ny == other.ny && nz == other.nz && dx == other.dx &&
           dy == other.dy && dz == other.dz && origin == other.origin;
  }
};

// One temperature snapshot on a grid.
struct TemperatureField {
  Grid grid;
  double time = 0.0;
  Eigen::VectorXd values;  // node_count() entries, x fastest

  TemperatureField() = default;
  TemperatureField(const Grid& g, double t, double uniform_value)
      : grid(g), time(t), values(Eigen::VectorXd::Constant(g.node_count(), uniform_value)) {}

  double& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }

  double max_value() const { return values.maxCoeff(); }

  // Trilinear interpolation at an interior physical point.
  double sample(double x, double y, double z) const;
};

// Binary snapshot format: magic "PBFT", u32 version, then f64 header
// (nx, ny, nz, dx, dy, dz, ox, oy, oz, time) and f64 values, little-endian.
void save_field(const TemperatureField& field, const std::filesystem::path& file);
TemperatureField load_field(const std::filesystem::path& file);

// CSV export with header t,x,y,z,T in SI units, full precision.
void save_field_csv(const TemperatureField& field, const std::filesystem::path& file);

}  // namespace pbf
