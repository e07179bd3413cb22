#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pbf/fd_solver.hpp"
#include "pbf/parallel.hpp"

using namespace pbf;

namespace {

MaterialParams constant_material(double kappa, double cp, double rho = 8000.0) {
  MaterialParams mat;
  mat.density = rho;
  mat.conductivity_law = {kappa, 0.0, 0.0, 1.0, 0.0};
  mat.capacity_law = {cp, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0};
  return mat;
}

BoundarySpec all_insulated() {
  BoundarySpec bc;
  for (Face f : kAllFaces) bc[f] = FaceCondition::insulated();
  return bc;
}

Grid cube_grid(int n, double h) {
  Grid g;
  g.nx = g.ny = g.nz = n;
  g.dx = g.dy = g.dz = h;
  g.origin = {-0.5 * (n - 1) * h, -0.5 * (n - 1) * h, -0.5 * (n - 1) * h};
  return g;
}

}  // namespace

TEST_CASE("stable_dt isotropic closed form and scaling") {
  MaterialParams mat = constant_material(20.0, 500.0, 8000.0);
  const double alpha = 20.0 / (8000.0 * 500.0);
  Grid g = cube_grid(5, 50e-6);
  const double dt = stable_dt(g, mat, 1.0);
  CHECK(dt == doctest::Approx(g.dx * g.dx / (6.0 * alpha)).epsilon(1e-12));

  Grid g2 = g;
  g2.dx *= 2.0;
  g2.dy *= 2.0;
  g2.dz *= 2.0;
  CHECK(stable_dt(g2, mat, 1.0) == doctest::Approx(4.0 * dt).epsilon(1e-12));

  // Hastelloy X: cross-check against a scripted 1 K scan
  MaterialParams hx;
  double alpha_max = 0.0;
  for (int t = 300; t <= 4000; ++t)
    alpha_max = std::max(alpha_max, hx.conductivity(t) / (hx.density * hx.heat_capacity(t)));
  Grid g3 = cube_grid(5, 50e-6);
  CHECK(stable_dt(g3, hx, 0.9) ==
        doctest::Approx(0.9 / (2.0 * alpha_max * 3.0 / (50e-6 * 50e-6))).epsilon(1e-12));
}

TEST_CASE("uniform field with zero source stays put") {
  MaterialParams mat = constant_material(20.0, 500.0);
  Grid g = cube_grid(7, 50e-6);
  TemperatureField f(g, 0.0, 300.0);
  TemperatureField f2 = step(f, stable_dt(g, mat, 0.5), nullptr, nullptr, mat, all_insulated());
  CHECK((f2.values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single hot node relaxes by the stencil") {
  const double kappa = 20.0, cp = 500.0, rho = 8000.0, h = 50e-6, dT = 10.0;
  MaterialParams mat = constant_material(kappa, cp, rho);
  Grid g = cube_grid(7, h);
  TemperatureField f(g, 0.0, 300.0);
  f.at(3, 3, 3) += dT;
  const double dt = 1e-5;
  TemperatureField f2 = step(f, dt, nullptr, nullptr, mat, all_insulated());
  const double unit = dt * kappa / (rho * cp) * dT / (h * h);
  CHECK(f2.at(3, 3, 3) == doctest::Approx(300.0 + dT - 6.0 * unit).epsilon(1e-10));
  CHECK(f2.at(2, 3, 3) == doctest::Approx(300.0 + unit).epsilon(1e-10));
  CHECK(f2.at(4, 3, 3) == doctest::Approx(300.0 + unit).epsilon(1e-10));
  CHECK(f2.at(3, 2, 3) == doctest::Approx(300.0 + unit).epsilon(1e-10));
  CHECK(f2.at(3, 4, 3) == doctest::Approx(300.0 + unit).epsilon(1e-10));
  CHECK(f2.at(3, 3, 2) == doctest::Approx(300.0 + unit).epsilon(1e-10));
  CHECK(f2.at(3, 3, 4) == doctest::Approx(300.0 + unit).epsilon(1e-10));
  // all other interior nodes untouched
  CHECK(f2.at(1, 1, 1) == doctest::Approx(300.0));
}

TEST_CASE("1D Gaussian diffusion matches the analytic heat kernel") {
  const double kappa = 20.0, cp = 500.0, rho = 8000.0;
  const double alpha = kappa / (rho * cp);
  MaterialParams mat = constant_material(kappa, cp, rho);

  Grid g;
  g.nx = 201;
  g.ny = g.nz = 3;
  g.dx = g.dy = g.dz = 20e-6;
  g.origin = {-0.5 * (g.nx - 1) * g.dx, -g.dy, -g.dz};

  const double sigma0 = 8.0 * g.dx, amp = 500.0;
  TemperatureField f(g, 0.0, 0.0);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i);
        f.at(i, j, k) = 300.0 + amp * std::exp(-x * x / (2.0 * sigma0 * sigma0));
      }

  BoundarySpec bc = all_insulated();
  const double dt = 0.25 * stable_dt(g, mat, 1.0);
  const int steps = 400;
  for (int n = 0; n < steps; ++n) f = step(f, dt, nullptr, nullptr, mat, bc);

  const double t_end = steps * dt;
  const double var = sigma0 * sigma0 + 2.0 * alpha * t_end;
  double linf = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double exact =
        300.0 + amp * std::sqrt(sigma0 * sigma0 / var) * std::exp(-x * x / (2.0 * var));
    linf = std::max(linf, std::abs(f.at(i, 1, 1) - exact) / exact);
  }
  CHECK(linf < 0.01);
}

TEST_CASE("apply_boundary kinds") {
  MaterialParams mat = constant_material(20.0, 500.0);
  Grid g = cube_grid(5, 50e-6);

  // dirichlet faces pin exactly
  TemperatureField f(g, 0.0, 400.0);
  BoundarySpec bc = all_insulated();
  bc[Face::ZMin] = FaceCondition::dirichlet(300.0);
  apply_boundary(f, bc, mat);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) CHECK(f.at(i, j, 0) == 300.0);

  // insulated face on a uniform field stays unchanged
  TemperatureField u(g, 0.0, 350.0);
  apply_boundary(u, all_insulated(), mat);
  CHECK((u.values.array() == 350.0).all());

  // convective face with T_face > T_inf is pulled strictly below insulated
  TemperatureField c(g, 0.0, 500.0);
  BoundarySpec bcc = all_insulated();
  bcc[Face::ZMax] = FaceCondition::convective(50.0, 300.0);
  apply_boundary(c, bcc, mat);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      CHECK(c.at(i, j, g.nz - 1) < 500.0);
      CHECK(c.at(i, j, g.nz - 1) > 300.0);
    }
}

TEST_CASE("insulated no-source march conserves frozen-cp energy") {
  MaterialParams mat;  // full nonlinear Hastelloy X
  Grid g = cube_grid(13, 50e-6);
  TemperatureField f(g, 0.0, 300.0);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double r2 = (std::pow(i - 6.0, 2) + std::pow(j - 6.0, 2) + std::pow(k - 6.0, 2));
        f.at(i, j, k) = 300.0 + 50.0 * std::exp(-r2 / 8.0);
      }
  Eigen::VectorXd cp0(g.node_count());
  for (std::size_t n = 0; n < g.node_count(); ++n) cp0[n] = mat.heat_capacity(f.values[n]);

  auto energy = [&](const TemperatureField& field) {
    return (cp0.array() * field.values.array()).sum() * mat.density * g.dx * g.dy * g.dz;
  };

  const double e0 = energy(f);
  BoundarySpec bc = all_insulated();
  const double dt = 0.5 * stable_dt(g, mat, 1.0);
  for (int n = 0; n < 1000; ++n) f = step(f, dt, nullptr, nullptr, mat, bc);
  CHECK(std::abs(energy(f) - e0) / e0 < 0.005);
}

TEST_CASE("solution invariant under x/y axis relabeling") {
  // transposed geometry and path give the transposed field
  MaterialParams mat;
  LaserParams laser;
  laser.penetration_depth = 150e-6;

  Grid g;
  g.nx = 21;
  g.ny = 21;
  g.nz = 7;
  g.dx = g.dy = g.dz = 50e-6;
  g.origin = {-0.5e-3, -0.5e-3, -0.3e-3};

  FdConfig cfg;
  cfg.grid = g;
  cfg.material = mat;
  cfg.laser = laser;
  cfg.bc = all_insulated();
  cfg.end_time = 2e-3;
  cfg.snapshot_times = {2e-3};

  std::vector<Track> tx = {{1, {-0.3e-3, 0.1e-3}, {0.3e-3, 0.1e-3}}};
  std::vector<Track> ty = {{1, {0.1e-3, -0.3e-3}, {0.1e-3, 0.3e-3}}};
  FdResult rx = solve(cfg, make_scenario(tx, {1}, laser.scan_speed));
  FdResult ry = solve(cfg, make_scenario(ty, {1}, laser.scan_speed));
  REQUIRE(rx.snapshots.size() == 1);
  REQUIRE(ry.snapshots.size() == 1);
  double worst = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        worst = std::max(worst,
                         std::abs(rx.snapshots[0].at(i, j, k) - ry.snapshots[0].at(j, i, k)));
  CHECK(worst < 1e-12 * 3000.0);
}

TEST_CASE("time refinement shows a first-order convergence trend") {
  MaterialParams mat = constant_material(20.0, 500.0);
  Grid g = cube_grid(11, 50e-6);
  TemperatureField f0(g, 0.0, 300.0);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        f0.at(i, j, k) =
            300.0 + 150.0 * std::exp(-(std::pow(i - 5.0, 2) + std::pow(j - 5.0, 2) +
                                       std::pow(k - 5.0, 2)) /
                                     6.0);
  BoundarySpec bc = all_insulated();
  const double t_end = 64.0 * 0.5 * stable_dt(g, mat, 1.0);
  auto march = [&](int steps) {
    TemperatureField f = f0;
    const double dt = t_end / steps;
    for (int n = 0; n < steps; ++n) f = step(f, dt, nullptr, nullptr, mat, bc);
    return f;
  };
  TemperatureField a = march(128), b = march(256), c = march(512);
  const double d1 = (a.values - b.values).cwiseAbs().maxCoeff();
  const double d2 = (b.values - c.values).cwiseAbs().maxCoeff();
  CHECK(d2 < d1);
}

TEST_CASE("spatial refinement is second order on the Gaussian problem") {
  const double kappa = 20.0, cp = 500.0, rho = 8000.0;
  const double alpha = kappa / (rho * cp);
  MaterialParams mat = constant_material(kappa, cp, rho);

  auto solve_1d = [&](int nx, double dt, double t_end) {
    Grid g;
    g.nx = nx;
    g.ny = g.nz = 3;
    g.dx = 2e-3 / (nx - 1);
    g.dy = g.dz = 50e-6;
    g.origin = {-1e-3, -50e-6, -50e-6};
    const double sigma0 = 150e-6, amp = 400.0;
    TemperatureField f(g, 0.0, 0.0);
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          f.at(i, j, k) =
              300.0 + amp * std::exp(-g.x(i) * g.x(i) / (2.0 * sigma0 * sigma0));
    BoundarySpec bc = all_insulated();
    const int steps = static_cast<int>(std::round(t_end / dt));
    for (int n = 0; n < steps; ++n) f = step(f, dt, nullptr, nullptr, mat, bc);
    double err = 0.0;
    const double var = sigma0 * sigma0 + 2.0 * alpha * t_end;
    for (int i = 1; i < g.nx - 1; ++i) {
      const double exact = 300.0 + amp * std::sqrt(sigma0 * sigma0 / var) *
                                       std::exp(-g.x(i) * g.x(i) / (2.0 * var));
      err = std::max(err, std::abs(f.at(i, 1, 1) - exact));
    }
    return err;
  };

  // tiny shared dt so the O(h^2) spatial error dominates the O(dt) part
  const double t_end = 1.2e-3;
  const double dt = 1e-6;
  const double e_coarse = solve_1d(51, dt, t_end);
  const double e_fine = solve_1d(101, dt, t_end);
  const double ratio = e_coarse / e_fine;
  CHECK(ratio > 2.8);
  CHECK(ratio < 5.2);
}

TEST_CASE("zero-power march stays at ambient and is deterministic") {
  MaterialParams mat;
  LaserParams laser;
  Grid g = cube_grid(9, 60e-6);
  FdConfig cfg;
  cfg.grid = g;
  cfg.material = mat;
  cfg.laser = laser;
  cfg.bc = all_insulated();
  cfg.end_time = 1e-3;
  cfg.snapshot_times = {0.5e-3, 1e-3};
  cfg.laser_active = false;

  std::vector<Track> tr = {{1, {-0.2e-3, 0.0}, {0.2e-3, 0.0}}};
  Scenario sc = make_scenario(tr, {1}, laser.scan_speed);
  FdResult r1 = solve(cfg, sc);
  REQUIRE(r1.snapshots.size() == 2);
  CHECK((r1.snapshots[1].values.array() == 300.0).all());

  FdResult r2 = solve(cfg, sc);
  for (std::size_t s = 0; s < r1.snapshots.size(); ++s)
    CHECK((r1.snapshots[s].values - r2.snapshots[s].values).cwiseAbs().maxCoeff() == 0.0);

  // thread-count independence of the stencil partitioning
  set_thread_count(1);
  FdResult r3 = solve(cfg, sc);
  set_thread_count(0);
  CHECK((r1.snapshots[1].values - r3.snapshots[1].values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-track melt: peak clears the melting threshold") {
  // desk-scale reproduction of the paper setup; the melt pool must develop
  MaterialParams mat;
  LaserParams laser;  // 150 W effective, 450 um radius, 0.1 m/s

  Grid g;
  g.nx = 41;
  g.ny = 25;
  g.nz = 13;
  g.dx = g.dy = g.dz = 25e-6;
  g.origin = {-0.5e-3, -0.3e-3, -0.3e-3};

  FdConfig cfg;
  cfg.grid = g;
  cfg.material = mat;
  cfg.laser = laser;
  cfg.end_time = 10e-3;
  cfg.snapshot_times = {10e-3};

  std::vector<Track> tr = {{1, {-0.5e-3, 0.0}, {0.5e-3, 0.0}}};
  FdResult res = solve(cfg, make_scenario(tr, {1}, laser.scan_speed));
  REQUIRE(res.snapshots.size() == 1);
  CHECK(res.snapshots[0].max_value() > 1600.0);
}

TEST_CASE("field round trips through PBFT and CSV exists") {
  Grid g = cube_grid(5, 40e-6);
  TemperatureField f(g, 1.5e-3, 321.0);
  f.at(2, 2, 2) = 1725.25;
  const auto dir = std::filesystem::temp_directory_path() / "pbf_field_test";
  std::filesystem::create_directories(dir);
  save_field(f, dir / "snap.pbft");
  TemperatureField r = load_field(dir / "snap.pbft");
  CHECK(r.grid.same_layout(f.grid));
  CHECK(r.time == f.time);
  CHECK((r.values - f.values).cwiseAbs().maxCoeff() == 0.0);
  save_field_csv(f, dir / "snap.csv");
  CHECK(std::filesystem::exists(dir / "snap.csv"));
  std::filesystem::remove_all(dir);
}
