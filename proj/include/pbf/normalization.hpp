#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace pbf {

// Affine maps between physical (t, x, y, z) and the [-1, 1]^4 cube the sine
// networks operate on, plus the output map T = offset + scale * N.
struct NormalizationSpec {
  Eigen::Vector4d center{0.0, 0.0, 0.0, 0.0};
  Eigen::Vector4d halfwidth{1.0, 1.0, 1.0, 1.0};
  double out_offset = 300.0;
  double out_scale = 1700.0;

  void validate() const {
    for (int i = 0; i < 4; ++i)
      if (!(halfwidth[i] > 0.0))
        throw std::invalid_argument("normalization halfwidths must be > 0");
    if (!(out_scale > 0.0)) throw std::invalid_argument("normalization out_scale must be > 0");
  }

  Eigen::Vector4d to_unit(const Eigen::Vector4d& physical) const {
    return (physical - center).cwiseQuotient(halfwidth);
  }
  Eigen::Vector4d to_physical(const Eigen::Vector4d& unit) const {
    return center + unit.cwiseProduct(halfwidth);
  }
  Eigen::MatrixXd to_unit_batch(const Eigen::MatrixXd& physical) const {
    return halfwidth.cwiseInverse().asDiagonal() * (physical.colwise() - center);
  }

  double to_kelvin(double network_output) const { return out_offset + out_scale * network_output; }
  double from_kelvin(double temperature) const { return (temperature - out_offset) / out_scale; }

  // chain factors for unnormalized derivatives: dT/du_i = out_scale * k_i * dN/du_i
  double first_derivative_factor(int axis) const { return out_scale / halfwidth[axis]; }
  double second_derivative_factor(int axis) const {
    return out_scale / (halfwidth[axis] * halfwidth[axis]);
  }
};

// Space-time box [t0, t1] x [domain]; the shared vocabulary between the
// sampler, trainers and normalization.
struct SpaceTimeBox {
  double t_begin = 0.0, t_end = 0.0;
  Eigen::Vector3d lo{0.0, 0.0, 0.0};
  Eigen::Vector3d hi{0.0, 0.0, 0.0};

  void validate() const {
    if (!(t_end > t_begin)) throw std::invalid_argument("space-time box: t_end must be > t_begin");
    for (int i = 0; i < 3; ++i)
      if (!(hi[i] > lo[i])) throw std::invalid_argument("space-time box: degenerate extent");
  }

  NormalizationSpec make_normalization(double out_offset, double out_scale) const {
    NormalizationSpec spec;
    spec.center[0] = 0.5 * (t_begin + t_end);
    spec.halfwidth[0] = 0.5 * (t_end - t_begin);
    for (int i = 0; i < 3; ++i) {
      spec.center[i + 1] = 0.5 * (lo[i] + hi[i]);
      spec.halfwidth[i + 1] = 0.5 * (hi[i] - lo[i]);
    }
    spec.out_offset = out_offset;
    spec.out_scale = out_scale;
    return spec;
  }

  bool contains(double t, const Eigen::Vector3d& p, double slack = 0.0) const {
    if (t < t_begin - slack || t > t_end + slack) return false;
    for (int i = 0; i < 3; ++i)
      if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
  }
};

// Any trained temperature surrogate: one PINN, a composed sequential chain,
// or an operator network bound to a path encoding.
class TemperatureSurrogate {
 public:
  virtual ~TemperatureSurrogate() = default;
  virtual double temperature(double t, double x, double y, double z) const = 0;

  // columns (t,x,y,z) -> temperatures; default loops over temperature()
  virtual Eigen::VectorXd temperature_batch(const Eigen::MatrixXd& queries) const {
    Eigen::VectorXd out(queries.cols());
    for (Eigen::Index i = 0; i < queries.cols(); ++i)
      out[i] = temperature(queries(0, i), queries(1, i), queries(2, i), queries(3, i));
    return out;
  }
};

}  // namespace pbf
