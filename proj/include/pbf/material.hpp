#pragma once

#include <cmath>
#include <stdexcept>

namespace pbf {

// kappa(T) = c0 + c1*T + tanh_amp * tanh(tanh_rate * (T - tanh_center))
// The raw law evaluators carry no range guard: network iterates can wander
// outside the physical range during training and the formulas are entire.
struct ConductivityLaw {
  double c0 = 229.87;
  double c1 = 0.0184;
  double tanh_amp = 225.10;
  double tanh_rate = 0.0118;
  double tanh_center = 1816.8;

  double value(double t) const { return c0 + c1 * t + tanh_amp * std::tanh(tanh_rate * (t - tanh_center)); }
  double derivative(double t) const {
    double sech = 1.0 / std::cosh(tanh_rate * (t - tanh_center));
    return c1 + tanh_amp * tanh_rate * sech * sech;
  }
  double second_derivative(double t) const {
    double arg = tanh_rate * (t - tanh_center);
    double sech = 1.0 / std::cosh(arg);
    return -2.0 * tanh_amp * tanh_rate * tanh_rate * sech * sech * std::tanh(arg);
  }
};

// cp(T) = c0 + c1*T + g1_amp * exp(-g1_rate*(T-g1_center)^2)
//                   + g2_amp * exp(-g2_rate*(T-g2_center)^2)
// The second Gaussian carries the latent heat of fusion (apparent capacity).
struct CapacityLaw {
  double c0 = 407.62;
  double c1 = 0.142;
  double g1_amp = -61.43;
  double g1_rate = 3.1e-4;
  double g1_center = 798.0;
  double g2_amp = 1054.96;
  double g2_rate = 6.2e-5;
  double g2_center = 1816.8;

  double value(double t) const {
    double d1 = t - g1_center, d2 = t - g2_center;
    return c0 + c1 * t + g1_amp * std::exp(-g1_rate * d1 * d1) +
           g2_amp * std::exp(-g2_rate * d2 * d2);
  }
  double derivative(double t) const {
    double d1 = t - g1_center, d2 = t - g2_center;
    return c1 - 2.0 * g1_rate * d1 * g1_amp * std::exp(-g1_rate * d1 * d1) -
           2.0 * g2_rate * d2 * g2_amp * std::exp(-g2_rate * d2 * d2);
  }
};

// Temperature-dependent material laws. Defaults are Hastelloy X; all
// coefficients are config-loadable so other alloys can be substituted.
struct MaterialParams {
  double density = 8351.91;  // kg/m^3
  ConductivityLaw conductivity_law;
  CapacityLaw capacity_law;

  void validate() const {
    if (!(density > 0.0)) throw std::invalid_argument("material.density must be > 0");
  }

  // W/(m K). Rejects non-finite and sub-zero temperatures rather than
  // clamping, so upstream solver blow-up surfaces immediately.
  double conductivity(double temperature) const {
    check_temperature(temperature);
    return conductivity_law.value(temperature);
  }

  // W/(m K^2), d(kappa)/dT
  double conductivity_derivative(double temperature) const {
    check_temperature(temperature);
    return conductivity_law.derivative(temperature);
  }

  // W/(m K^3), d^2(kappa)/dT^2
  double conductivity_second_derivative(double temperature) const {
    check_temperature(temperature);
    return conductivity_law.second_derivative(temperature);
  }

  // J/(kg K)
  double heat_capacity(double temperature) const {
    check_temperature(temperature);
    return capacity_law.value(temperature);
  }

  // J/(kg K^2), d(cp)/dT
  double heat_capacity_derivative(double temperature) const {
    check_temperature(temperature);
    return capacity_law.derivative(temperature);
  }

  // m^2/s, thermal diffusivity kappa/(rho cp)
  double diffusivity(double temperature) const {
    return conductivity(temperature) / (density * heat_capacity(temperature));
  }

 private:
  static void check_temperature(double temperature) {
    if (!std::isfinite(temperature))
      throw std::domain_error("material law: temperature must be finite");
    if (temperature < 0.0)
      throw std::domain_error("material law: temperature below 0 K");
  }
};

}  // namespace pbf
