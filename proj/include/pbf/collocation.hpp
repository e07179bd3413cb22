#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

#include "pbf/fd_solver.hpp"
#include "pbf/normalization.hpp"
#include "pbf/path.hpp"

namespace pbf {

struct CollocationCounts {
  int n_pde = 20000;
  int n_ic = 2000;
  int n_bc_per_face = 1000;
};

struct ClusteringConfig {
  double fraction = 0.5;       // share of interior points pulled to the spot
  double radius = 2 * 450e-6;  // Gaussian std dev around the laser position
};

// Tagged point sets for the physics losses. Interior and boundary points
// are stored as 4-row (t, x, y, z) matrices; initial points as 3-row
// (x, y, z) at t = t_begin.
struct CollocationSet {
  Eigen::MatrixXd interior;                 // 4 x n_pde
  Eigen::MatrixXd initial;                  // 3 x n_ic
  std::array<Eigen::MatrixXd, 6> boundary;  // per face, 4 x n_bc
};

// Sobol base points over the space-time box; a `clustering.fraction` share
// of interior points gets its spatial coordinates redrawn from a Gaussian
// centered at the instantaneous laser position (on the top surface),
// rejection-resampled into the domain. Deterministic for a fixed seed.
// `scenario` may be null (no clustering target; laser-off intervals).
// sobol_offset shifts the underlying stream so several sets can share it.
CollocationSet sample_collocation(const SpaceTimeBox& box, const CollocationCounts& counts,
                                  const Scenario* scenario, const ClusteringConfig& clustering,
                                  std::uint64_t seed, std::uint64_t sobol_offset = 0);

}  // namespace pbf
