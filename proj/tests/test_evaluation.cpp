#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pbf/evaluation.hpp"
#include "pbf/rng.hpp"

using namespace pbf;

namespace {

Grid symmetric_grid(int nx, int ny, int nz, double h) {
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.dx = g.dy = g.dz = h;
  g.origin = {-0.5 * (nx - 1) * h, -0.5 * (ny - 1) * h, -0.5 * (nz - 1) * h};
  return g;
}

TemperatureField gaussian_field(const Grid& g, double a, double b, double c) {
  TemperatureField f(g, 0.0, 0.0);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i), y = g.y(j), z = g.z(k);
        f.at(i, j, k) =
            300.0 + 1700.0 * std::exp(-(x / a) * (x / a) - (y / b) * (y / b) - (z / c) * (z / c));
      }
  return f;
}

}  // namespace

TEST_CASE("mape basics") {
  Grid g = symmetric_grid(7, 7, 5, 50e-6);
  TemperatureField ref(g, 1e-3, 400.0);
  CHECK(mape(ref, ref) == 0.0);

  TemperatureField pred = ref;
  pred.values *= 1.05;
  CHECK(mape(pred, ref) == doctest::Approx(0.05).epsilon(1e-12));

  // random pair vs straightforward loop
  Rng rng(7);
  TemperatureField a(g, 1e-3, 0.0), b(g, 1e-3, 0.0);
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    a.values[i] = rng.uniform(300.0, 2000.0);
    b.values[i] = rng.uniform(300.0, 2000.0);
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.values.size(); ++i)
    acc += std::abs(a.values[i] - b.values[i]) / b.values[i];
  acc /= static_cast<double>(a.values.size());
  CHECK(mape(a, b) == doctest::Approx(acc).epsilon(1e-14));

  TemperatureField wrong_time = ref;
  wrong_time.time = 2e-3;
  CHECK_THROWS_AS(mape(wrong_time, ref), std::invalid_argument);
  Grid g2 = symmetric_grid(5, 7, 5, 50e-6);
  TemperatureField wrong_grid(g2, 1e-3, 400.0);
  CHECK_THROWS_AS(mape(wrong_grid, ref), std::invalid_argument);
}

TEST_CASE("mape invariant under node relabeling") {
  Grid g = symmetric_grid(6, 5, 4, 50e-6);
  Rng rng(99);
  TemperatureField a(g, 0.0, 0.0), b(g, 0.0, 0.0);
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    a.values[i] = rng.uniform(300.0, 2000.0);
    b.values[i] = rng.uniform(300.0, 2000.0);
  }
  const double base = mape(a, b);
  // reverse both value arrays: same multiset of node pairs
  TemperatureField ar = a, br = b;
  ar.values = a.values.reverse();
  br.values = b.values.reverse();
  CHECK(mape(ar, br) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("meltpool dims against the analytic level set") {
  const double a = 0.6e-3, b = 0.4e-3, c = 0.25e-3;
  Grid g = symmetric_grid(41, 41, 31, 50e-6);
  TemperatureField f = gaussian_field(g, a, b, c);

  MeltPoolDims dims = meltpool_dims(f, 1600.0);
  const double root = std::sqrt(std::log(1700.0 / 1300.0));
  CHECK(std::abs(dims.length - 2.0 * a * root) < 0.5 * g.dx);
  CHECK(std::abs(dims.width - 2.0 * b * root) < 0.5 * g.dy);
  CHECK(std::abs(dims.depth - 2.0 * c * root) < 0.5 * g.dz);

  // all-cold field and threshold above the max give zeros
  TemperatureField cold(g, 0.0, 300.0);
  MeltPoolDims none = meltpool_dims(cold, 1600.0);
  CHECK(none.length == 0.0);
  CHECK(none.width == 0.0);
  CHECK(none.depth == 0.0);
  MeltPoolDims above = meltpool_dims(f, 2100.0);
  CHECK(above.length == 0.0);

  // monotone non-increasing in threshold
  double prev = std::numeric_limits<double>::infinity();
  for (double thr : {400.0, 800.0, 1200.0, 1600.0, 1900.0}) {
    MeltPoolDims d = meltpool_dims(f, thr);
    CHECK(d.length <= prev);
    prev = d.length;
  }

  // mirrored field keeps the width (y symmetry)
  TemperatureField mirror = f;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) mirror.at(i, j, k) = f.at(i, g.ny - 1 - j, k);
  MeltPoolDims dm = meltpool_dims(mirror, 1600.0);
  CHECK(dm.width == doctest::Approx(dims.width).epsilon(1e-12));

  // interpolated crossings stay between bracketing nodes: extents bounded
  // by the grid span
  CHECK(dims.length <= (g.nx - 1) * g.dx);
  CHECK(dims.width <= (g.ny - 1) * g.dy);
  CHECK(dims.depth <= (g.nz - 1) * g.dz);
}

TEST_CASE("fd reference interpolation and histories") {
  Grid g = symmetric_grid(5, 5, 5, 50e-6);
  TemperatureField f0(g, 0.0, 300.0), f1(g, 1e-3, 400.0);
  FdReference ref({f0, f1});

  // exact at snapshot times, linear between
  CHECK(ref.temperature(0.0, 0.0, 0.0, 0.0) == doctest::Approx(300.0));
  CHECK(ref.temperature(1e-3, 0.0, 0.0, 0.0) == doctest::Approx(400.0));
  CHECK(ref.temperature(0.5e-3, 0.0, 0.0, 0.0) == doctest::Approx(350.0));
  CHECK_THROWS_AS(ref.temperature(2e-3, 0.0, 0.0, 0.0), std::out_of_range);

  auto series = temperature_history(ref, {0.0, 0.0, 0.0}, {0.0, 0.25e-3, 1e-3});
  CHECK(series[0] == doctest::Approx(300.0));
  CHECK(series[1] == doctest::Approx(325.0));
  CHECK(series[2] == doctest::Approx(400.0));
}

TEST_CASE("compare against itself is exact and reports round trip") {
  Grid g = symmetric_grid(15, 13, 9, 60e-6);
  TemperatureField f0 = gaussian_field(g, 0.5e-3, 0.35e-3, 0.2e-3);
  f0.time = 1e-3;
  TemperatureField f1 = f0;
  f1.time = 2e-3;
  f1.values *= 0.9;
  FdReference ref({f0, f1});

  EvalConfig cfg;
  cfg.history_probes = {{0.0, 0.0, 0.0}};
  cfg.history_times = {1e-3, 1.5e-3, 2e-3};
  EvalReport report = compare(ref, ref, cfg);
  CHECK(report.mape == doctest::Approx(0.0).epsilon(1e-15));
  REQUIRE(report.snapshots.size() == 2);
  CHECK(report.snapshots[0].length_error == doctest::Approx(0.0));
  CHECK(report.snapshots[0].dims_reference.length > 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "pbf_eval_test";
  std::filesystem::create_directories(dir);
  save_report(report, dir / "report.json");
  EvalReport loaded = load_report(dir / "report.json");
  CHECK(to_json(loaded) == to_json(report));
  save_report_csv(report, dir / "report.csv");
  save_history_csv(report, dir / "history.csv");
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "history.csv"));
  std::filesystem::remove_all(dir);
}
