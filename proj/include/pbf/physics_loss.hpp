#pragma once

#include "pbf/fd_solver.hpp"
#include "pbf/material.hpp"

namespace pbf {

// Physical-space derivatives of a temperature field at one point.
struct PointDerivatives {
  double value = 0.0;                      // T (K)
  double dt = 0.0;                         // dT/dt
  double dx = 0.0, dy = 0.0, dz = 0.0;     // spatial gradient
  double dxx = 0.0, dyy = 0.0, dzz = 0.0;  // diagonal second derivatives
};

// Strong-form residual of the nonlinear heat equation,
//   R = rho cp(T) T_t - kappa(T) lap(T) - kappa'(T) |grad T|^2 - q_v,
// with the conductivity gradient taken through the chain rule (kappa
// depends on space only through T). Units W/m^3.
double pde_residual_from_derivatives(const MaterialParams& material, const PointDerivatives& d,
                                     double q_v);

// Partial derivatives of the residual with respect to each entry of
// PointDerivatives (for adjoint seeding through the network outputs).
struct ResidualPartials {
  double dT = 0.0;
  double dTt = 0.0;
  double dTx = 0.0, dTy = 0.0, dTz = 0.0;
  double dTxx = 0.0, dTyy = 0.0, dTzz = 0.0;
};

ResidualPartials pde_residual_partials(const MaterialParams& material,
                                       const PointDerivatives& d);

// Boundary residual on one face for the Neumann-type losses. `normal_grad`
// is dT/dn with n the outward normal. Insulated target: dT/dn - q_target
// (q_target = 0); convective: -kappa(T) dT/dn - h (T - T_inf).
struct FaceResidual {
  double value = 0.0;
  double dT = 0.0;         // d(residual)/dT
  double dGn = 0.0;        // d(residual)/d(normal gradient)
};

FaceResidual neumann_residual(double normal_grad, double q_target);
FaceResidual convective_residual(const MaterialParams& material, double temperature,
                                 double normal_grad, double h, double t_inf);

// outward-normal sign of a face along its axis: -1 for min faces, +1 for max
inline double face_normal_sign(Face face) {
  return (static_cast<int>(face) % 2 == 1) ? 1.0 : -1.0;
}
inline int face_axis(Face face) { return static_cast<int>(face) / 2; }

}  // namespace pbf
