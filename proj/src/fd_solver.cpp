#include "pbf/fd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pbf/parallel.hpp"

namespace pbf {

double stable_dt(const Grid& grid, const MaterialParams& material, double safety) {
  if (!(safety > 0.0 && safety <= 1.0))
    throw std::invalid_argument("stable_dt: safety must be in (0, 1]");
  double alpha_max = 0.0;
  for (int t = 300; t <= 4000; ++t)
    alpha_max = std::max(alpha_max, material.diffusivity(static_cast<double>(t)));
  const double inv =
      1.0 / (grid.dx * grid.dx) + 1.0 / (grid.dy * grid.dy) + 1.0 / (grid.dz * grid.dz);
  return safety / (2.0 * alpha_max * inv);
}

TemperatureField step(const TemperatureField& field, double dt, const Scenario* scenario,
                      const LaserParams* laser, const MaterialParams& material,
                      const BoundarySpec& bc) {
  const Grid& g = field.grid;
  g.validate();

  // nodal conductivity of the current field
  Eigen::VectorXd kappa(g.node_count());
  for (std::size_t n = 0; n < g.node_count(); ++n)
    kappa[n] = material.conductivity(field.values[n]);

  std::optional<Eigen::Vector2d> spot;
  if (scenario && laser && field.time <= scenario->total_duration())
    spot = scenario->laser_position(field.time);

  TemperatureField next = field;
  next.time = field.time + dt;

  const double inv_dx2 = 1.0 / (g.dx * g.dx);
  const double inv_dy2 = 1.0 / (g.dy * g.dy);
  const double inv_dz2 = 1.0 / (g.dz * g.dz);
  const double inv_2dx = 0.5 / g.dx;
  const double inv_2dy = 0.5 / g.dy;
  const double inv_2dz = 0.5 / g.dz;

  const auto& T = field.values;
  auto slab = [&](std::size_t, std::size_t kb, std::size_t ke) {
    for (std::size_t ks = kb; ks < ke; ++ks) {
      const int k = static_cast<int>(ks) + 1;
      for (int j = 1; j < g.ny - 1; ++j) {
        for (int i = 1; i < g.nx - 1; ++i) {
          const std::size_t n = g.index(i, j, k);
          const std::size_t nxm = n - 1, nxp = n + 1;
          const std::size_t nym = n - g.nx, nyp = n + g.nx;
          const std::size_t nzm = n - static_cast<std::size_t>(g.nx) * g.ny;
          const std::size_t nzp = n + static_cast<std::size_t>(g.nx) * g.ny;

          const double d2x = (T[nxp] - 2.0 * T[n] + T[nxm]) * inv_dx2;
          const double d2y = (T[nyp] - 2.0 * T[n] + T[nym]) * inv_dy2;
          const double d2z = (T[nzp] - 2.0 * T[n] + T[nzm]) * inv_dz2;

          const double kx = (kappa[nxp] - kappa[nxm]) * inv_2dx * (T[nxp] - T[nxm]) * inv_2dx;
          const double ky = (kappa[nyp] - kappa[nym]) * inv_2dy * (T[nyp] - T[nym]) * inv_2dy;
          const double kz = (kappa[nzp] - kappa[nzm]) * inv_2dz * (T[nzp] - T[nzm]) * inv_2dz;

          double qv = 0.0;
          if (spot) qv = heat_source_at(g.x(i), g.y(j), g.z(k), *spot, *laser);

          const double rho_cp = material.density * material.heat_capacity(T[n]);
          next.values[n] =
              T[n] + dt / rho_cp * (kappa[n] * (d2x + d2y + d2z) + kx + ky + kz + qv);
        }
      }
    }
  };
  parallel_for_blocks(static_cast<std::size_t>(g.nz - 2), 4, slab);

  apply_boundary(next, bc, material);

  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double v = next.at(i, j, k);
        if (!std::isfinite(v)) {
          std::ostringstream msg;
          msg << "fd step blew up: non-finite temperature at node (" << i << "," << j << ","
              << k << "), t=" << next.time;
          throw std::runtime_error(msg.str());
        }
      }
  return next;
}

namespace {

// face traversal: for each node on the face, gives (face node, interior neighbor, spacing)
template <typename Fn>
void for_each_face_node(const Grid& g, Face face, Fn&& fn) {
  switch (face) {
    case Face::XMin:
      for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j) fn(g.index(0, j, k), g.index(1, j, k), g.dx);
      break;
    case Face::XMax:
      for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j) fn(g.index(g.nx - 1, j, k), g.index(g.nx - 2, j, k), g.dx);
      break;
    case Face::YMin:
      for (int k = 0; k < g.nz; ++k)
        for (int i = 0; i < g.nx; ++i) fn(g.index(i, 0, k), g.index(i, 1, k), g.dy);
      break;
    case Face::YMax:
      for (int k = 0; k < g.nz; ++k)
        for (int i = 0; i < g.nx; ++i) fn(g.index(i, g.ny - 1, k), g.index(i, g.ny - 2, k), g.dy);
      break;
    case Face::ZMin:
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) fn(g.index(i, j, 0), g.index(i, j, 1), g.dz);
      break;
    case Face::ZMax:
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) fn(g.index(i, j, g.nz - 1), g.index(i, j, g.nz - 2), g.dz);
      break;
  }
}

}  // namespace

void apply_boundary(TemperatureField& field, const BoundarySpec& bc,
                    const MaterialParams& material) {
  const Grid& g = field.grid;
  // Neumann-type faces first, Dirichlet last so fixed temperatures win on
  // shared edges and corners.
  for (Face face : kAllFaces) {
    const FaceCondition& cond = bc[face];
    if (cond.kind == FaceCondition::Kind::Insulated) {
      for_each_face_node(g, face, [&](std::size_t nf, std::size_t ni, double) {
        field.values[nf] = field.values[ni];
      });
    } else if (cond.kind == FaceCondition::Kind::Convective) {
      // -kappa (T_f - T_i)/delta = h (T_f - T_inf), kappa at the neighbor
      for_each_face_node(g, face, [&](std::size_t nf, std::size_t ni, double delta) {
        const double kappa = material.conductivity(field.values[ni]);
        field.values[nf] =
            (kappa * field.values[ni] + cond.h * delta * cond.t_inf) / (kappa + cond.h * delta);
      });
    }
  }
  for (Face face : kAllFaces) {
    const FaceCondition& cond = bc[face];
    if (cond.kind == FaceCondition::Kind::Dirichlet) {
      for_each_face_node(g, face, [&](std::size_t nf, std::size_t, double) {
        field.values[nf] = cond.value;
      });
    }
  }
}

FdResult solve(const FdConfig& config, const Scenario& scenario) {
  config.grid.validate();
  config.material.validate();
  config.laser.validate();
  if (!(config.end_time > 0.0)) throw std::invalid_argument("fd solve: end_time must be > 0");
  if (config.laser.radius < 4.0 * std::min({config.grid.dx, config.grid.dy, config.grid.dz}) &&
      config.laser_active)
    std::fprintf(stderr,
                 "warning: grid resolves the laser radius with < 4 nodes; expect smearing\n");

  const double dt_cap = stable_dt(config.grid, config.material, config.safety);
  const std::size_t steps = static_cast<std::size_t>(std::ceil(config.end_time / dt_cap - 1e-12));
  const double dt = config.end_time / static_cast<double>(steps);

  std::vector<std::size_t> snap_steps;
  snap_steps.reserve(config.snapshot_times.size());
  for (double t : config.snapshot_times) {
    if (t < 0.0 || t > config.end_time + 1e-12)
      throw std::invalid_argument("fd solve: snapshot time outside [0, end_time]");
    snap_steps.push_back(static_cast<std::size_t>(std::llround(t / dt)));
  }

  TemperatureField field(config.grid, 0.0, config.initial_temperature);
  apply_boundary(field, config.bc, config.material);

  FdResult result;
  result.dt = dt;
  result.steps = steps;
  auto emit = [&](std::size_t step_index) {
    for (std::size_t s = 0; s < snap_steps.size(); ++s)
      if (snap_steps[s] == step_index) result.snapshots.push_back(field);
  };
  emit(0);
  for (std::size_t n = 0; n < steps; ++n) {
    try {
      field = step(field, dt, config.laser_active ? &scenario : nullptr,
                   config.laser_active ? &config.laser : nullptr, config.material, config.bc);
    } catch (const std::runtime_error& err) {
      throw std::runtime_error(std::string(err.what()) + " (step " + std::to_string(n + 1) + ")");
    }
    emit(n + 1);
  }
  return result;
}

}  // namespace pbf
