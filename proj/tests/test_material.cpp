#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pbf/material.hpp"
#include "pbf/rng.hpp"

using pbf::MaterialParams;

TEST_CASE("conductivity matches the constitutive law") {
  MaterialParams mat;
  // tanh term vanishes at the transition temperature
  CHECK(mat.conductivity(1816.8) == doctest::Approx(229.87 + 0.0184 * 1816.8).epsilon(1e-12));
  CHECK(mat.conductivity(1816.8) == doctest::Approx(263.299).epsilon(1e-5));
  // far below / above the transition the tanh saturates
  CHECK(mat.conductivity(300.0) ==
        doctest::Approx(229.87 + 0.0184 * 300.0 + 225.10 * std::tanh(0.0118 * (300.0 - 1816.8)))
            .epsilon(1e-12));
  CHECK(mat.conductivity(300.0) == doctest::Approx(10.29).epsilon(1e-3));
  // saturated tanh: 229.87 + 0.0184*3000 + 225.10
  CHECK(mat.conductivity(3000.0) == doctest::Approx(510.17).epsilon(1e-4));
}

TEST_CASE("heat capacity matches the constitutive law") {
  MaterialParams mat;
  CHECK(mat.heat_capacity(798.0) == doctest::Approx(459.506).epsilon(1e-4));
  CHECK(mat.heat_capacity(1816.8) == doctest::Approx(1720.57).epsilon(1e-4));
  CHECK(mat.heat_capacity(300.0) == doctest::Approx(450.22).epsilon(1e-4));
}

TEST_CASE("conductivity derivative analytic values") {
  MaterialParams mat;
  CHECK(mat.conductivity_derivative(1816.8) == doctest::Approx(2.67458).epsilon(1e-5));
  // sech^2 vanishes far from the transition
  CHECK(mat.conductivity_derivative(100.0) == doctest::Approx(0.0184).epsilon(1e-8));
  CHECK(mat.conductivity_derivative(5000.0) == doctest::Approx(0.0184).epsilon(1e-8));
}

TEST_CASE("analytic derivatives match central finite differences") {
  MaterialParams mat;
  pbf::Rng rng(1234);
  const double h = 1e-3;
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(300.0, 4000.0);
    const double fd_k = (mat.conductivity(t + h) - mat.conductivity(t - h)) / (2.0 * h);
    CHECK(mat.conductivity_derivative(t) == doctest::Approx(fd_k).epsilon(1e-5));
    const double fd_cp = (mat.heat_capacity(t + h) - mat.heat_capacity(t - h)) / (2.0 * h);
    CHECK(mat.heat_capacity_derivative(t) ==
          doctest::Approx(fd_cp).epsilon(1e-5).scale(std::max(1.0, std::abs(fd_cp))));
    const double fd_k2 =
        (mat.conductivity_derivative(t + h) - mat.conductivity_derivative(t - h)) / (2.0 * h);
    CHECK(mat.conductivity_second_derivative(t) ==
          doctest::Approx(fd_k2).epsilon(1e-4).scale(std::max(1e-3, std::abs(fd_k2))));
  }
}

TEST_CASE("laws stay positive and conductivity is monotone") {
  MaterialParams mat;
  double prev = mat.conductivity(250.0);
  for (double t = 250.0; t <= 5000.0; t += 1.0) {
    CHECK(mat.conductivity(t) > 0.0);
    CHECK(mat.heat_capacity(t) > 0.0);
    if (t >= 300.0 && t <= 4000.0) {
      CHECK(mat.conductivity(t) >= prev);
      prev = mat.conductivity(t);
    }
  }
}

TEST_CASE("apparent-capacity peak sits at the fusion Gaussian") {
  MaterialParams mat;
  double best_t = 300.0, best = -1.0;
  for (double t = 300.0; t <= 4000.0; t += 0.125) {
    const double cp = mat.heat_capacity(t);
    if (cp > best) {
      best = cp;
      best_t = t;
    }
  }
  // the linear term shifts the maximum slightly above the Gaussian center:
  // stationarity gives T* = center + c1 / (2 * g2_rate * g2_amp)
  const double t_star = 1816.8 + 0.142 / (2.0 * 6.2e-5 * 1054.96);
  CHECK(std::abs(best_t - t_star) < 0.25);
  CHECK(std::abs(best_t - 1816.8) < 2.0);
}

TEST_CASE("non-finite and negative temperatures are rejected") {
  MaterialParams mat;
  CHECK_THROWS_AS(mat.conductivity(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(mat.conductivity(-1.0), std::domain_error);
  CHECK_THROWS_AS(mat.heat_capacity(std::numeric_limits<double>::infinity()),
                  std::domain_error);
  CHECK_THROWS_AS(mat.conductivity_derivative(-5.0), std::domain_error);
}

TEST_CASE("invalid density is rejected") {
  MaterialParams mat;
  mat.density = 0.0;
  CHECK_THROWS_AS(mat.validate(), std::invalid_argument);
}
