#include "pbf/physics_loss.hpp"

namespace pbf {

// Raw law evaluation throughout: training iterates can propose unphysical
// temperatures and the loss must stay finite there.
double pde_residual_from_derivatives(const MaterialParams& material, const PointDerivatives& d,
                                     double q_v) {
  const double cp = material.capacity_law.value(d.value);
  const double kappa = material.conductivity_law.value(d.value);
  const double dkappa = material.conductivity_law.derivative(d.value);
  const double lap = d.dxx + d.dyy + d.dzz;
  const double grad2 = d.dx * d.dx + d.dy * d.dy + d.dz * d.dz;
  return material.density * cp * d.dt - kappa * lap - dkappa * grad2 - q_v;
}

ResidualPartials pde_residual_partials(const MaterialParams& material,
                                       const PointDerivatives& d) {
  const double kappa = material.conductivity_law.value(d.value);
  const double dkappa = material.conductivity_law.derivative(d.value);
  const double ddkappa = material.conductivity_law.second_derivative(d.value);
  const double dcp = material.capacity_law.derivative(d.value);
  const double lap = d.dxx + d.dyy + d.dzz;
  const double grad2 = d.dx * d.dx + d.dy * d.dy + d.dz * d.dz;

  ResidualPartials p;
  p.dT = material.density * dcp * d.dt - dkappa * lap - ddkappa * grad2;
  p.dTt = material.density * material.capacity_law.value(d.value);
  p.dTx = -2.0 * dkappa * d.dx;
  p.dTy = -2.0 * dkappa * d.dy;
  p.dTz = -2.0 * dkappa * d.dz;
  p.dTxx = p.dTyy = p.dTzz = -kappa;
  return p;
}

FaceResidual neumann_residual(double normal_grad, double q_target) {
  return {normal_grad - q_target, 0.0, 1.0};
}

FaceResidual convective_residual(const MaterialParams& material, double temperature,
                                 double normal_grad, double h, double t_inf) {
  const double kappa = material.conductivity_law.value(temperature);
  const double dkappa = material.conductivity_law.derivative(temperature);
  FaceResidual r;
  r.value = -kappa * normal_grad - h * (temperature - t_inf);
  r.dT = -dkappa * normal_grad - h;
  r.dGn = -kappa;
  return r;
}

}  // namespace pbf
