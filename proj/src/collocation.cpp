#include "pbf/collocation.hpp"

#include <stdexcept>

#include "pbf/rng.hpp"
#include "pbf/sobol.hpp"

namespace pbf {

CollocationSet sample_collocation(const SpaceTimeBox& box, const CollocationCounts& counts,
                                  const Scenario* scenario, const ClusteringConfig& clustering,
                                  std::uint64_t seed, std::uint64_t sobol_offset) {
  box.validate();
  if (counts.n_pde < 1 || counts.n_ic < 1 || counts.n_bc_per_face < 1)
    throw std::invalid_argument("collocation counts must be > 0");
  if (clustering.fraction < 0.0 || clustering.fraction > 1.0)
    throw std::invalid_argument("clustering fraction must be in [0, 1]");

  const double t0 = box.t_begin, t1 = box.t_end;
  const Eigen::Vector3d lo = box.lo, hi = box.hi, ext = hi - lo;

  CollocationSet set;

  // interior: 4D Sobol, then clustered redraw for the configured fraction
  {
    SobolSequence sobol(4, sobol_offset);
    set.interior.resize(4, counts.n_pde);
    for (int i = 0; i < counts.n_pde; ++i) {
      Eigen::VectorXd u = sobol.next();
      set.interior(0, i) = t0 + u[0] * (t1 - t0);
      for (int a = 0; a < 3; ++a) set.interior(a + 1, i) = lo[a] + u[a + 1] * ext[a];
    }
    const int n_cluster =
        scenario ? static_cast<int>(clustering.fraction * counts.n_pde) : 0;
    if (n_cluster > 0) {
      Rng rng(derive_seed(seed, "cluster"));
      const double sigma = clustering.radius;
      // every k-th point is redrawn so the clustered share stays spread over
      // the Sobol ordering
      const double stride = static_cast<double>(counts.n_pde) / n_cluster;
      for (int c = 0; c < n_cluster; ++c) {
        const int i = static_cast<int>(c * stride);
        const double t = set.interior(0, i);
        const double ts = std::min(t, scenario->total_duration());
        Eigen::Vector2d spot = scenario->laser_position(ts);
        for (int attempt = 0;; ++attempt) {
          Eigen::Vector3d p(rng.normal(spot.x(), sigma), rng.normal(spot.y(), sigma),
                            rng.normal(hi.z(), sigma));
          if (p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y() &&
              p.z() > lo.z() && p.z() < hi.z()) {
            set.interior.block<3, 1>(1, i) = p;
            break;
          }
          if (attempt > 10000)
            throw std::runtime_error("clustering rejection sampling cannot reach the domain");
        }
      }
    }
  }

  // initial plane: 3D Sobol at t = t0
  {
    SobolSequence sobol(3, sobol_offset);
    set.initial.resize(3, counts.n_ic);
    for (int i = 0; i < counts.n_ic; ++i) {
      Eigen::VectorXd u = sobol.next();
      for (int a = 0; a < 3; ++a) set.initial(a, i) = lo[a] + u[a] * ext[a];
    }
  }

  // faces: 3D Sobol over (t, two in-face axes)
  for (Face face : kAllFaces) {
    const int f = static_cast<int>(face);
    const int axis = f / 2;           // 0:x 1:y 2:z
    const bool at_max = (f % 2) == 1;
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    SobolSequence sobol(3, sobol_offset);
    Eigen::MatrixXd& pts = set.boundary[f];
    pts.resize(4, counts.n_bc_per_face);
    for (int i = 0; i < counts.n_bc_per_face; ++i) {
      Eigen::VectorXd u = sobol.next();
      pts(0, i) = t0 + u[0] * (t1 - t0);
      pts(axis + 1, i) = at_max ? hi[axis] : lo[axis];
      pts(a1 + 1, i) = lo[a1] + u[1] * ext[a1];
      pts(a2 + 1, i) = lo[a2] + u[2] * ext[a2];
    }
  }

  return set;
}

}  // namespace pbf
