#include "pbf/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace pbf {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes(std::move(layer_sizes)) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("mlp layer sizes must be >= 1");
  const int layers = static_cast<int>(sizes.size()) - 1;
  weights.resize(layers);
  biases.resize(layers);
  for (int l = 0; l < layers; ++l) {
    weights[l].setZero(sizes[l + 1], sizes[l]);
    biases[l].setZero(sizes[l + 1]);
  }
  betas = Eigen::VectorXd::Ones(layers - 1);
}

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index n = betas.size();
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void Mlp::init_params(Rng& rng) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const double bound = std::sqrt(6.0 / (weights[l].cols() + weights[l].rows()));
    for (Eigen::Index c = 0; c < weights[l].cols(); ++c)
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
        weights[l](r, c) = rng.uniform(-bound, bound);
    biases[l].setZero();
  }
  betas.setOnes();
}

Eigen::VectorXd Mlp::pack() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(weights[l].data(), weights[l].size());
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  flat.segment(at, betas.size()) = betas;
  return flat;
}

void Mlp::unpack(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("mlp unpack: parameter count mismatch");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(weights[l].data(), weights[l].size()) =
        flat.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
  betas = flat.segment(at, betas.size());
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim())
    throw std::invalid_argument("mlp forward: input dimension mismatch");
  Eigen::MatrixXd a = inputs;
  const int layers = layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
    if (l + 1 < layers) {
      const double alpha = M_PI * betas[l];
      a = (alpha * z.array()).sin();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::VectorXd& input) const {
  return forward(input).col(0);
}

MlpEval mlp_eval(const Mlp& net, const Eigen::MatrixXd& inputs, int order, MlpTape* tape) {
  if (inputs.rows() != net.input_dim())
    throw std::invalid_argument("mlp_eval: input dimension mismatch");
  if (order < 0 || order > 2) throw std::invalid_argument("mlp_eval: order must be 0, 1 or 2");

  const int d = net.input_dim();
  const int layers = net.layer_count();
  const Eigen::Index batch = inputs.cols();

  Eigen::MatrixXd a = inputs;
  std::vector<Eigen::MatrixXd> da, dda;
  if (order >= 1) {
    da.resize(d);
    for (int j = 0; j < d; ++j) {
      da[j].setZero(d, batch);
      da[j].row(j).setOnes();
    }
  }
  if (order >= 2) {
    dda.assign(d, Eigen::MatrixXd::Zero(d, batch));
  }

  if (tape) {
    tape->order = order;
    tape->input = inputs;
    tape->z.clear();
    tape->s.clear();
    tape->c.clear();
    tape->dz.clear();
    tape->ddz.clear();
    tape->a.clear();
    tape->da.clear();
    tape->dda.clear();
  }

  for (int l = 0; l < layers; ++l) {
    if (tape) {
      tape->a.push_back(a);
      tape->da.push_back(da);
      tape->dda.push_back(dda);
    }
    Eigen::MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
    std::vector<Eigen::MatrixXd> dz(order >= 1 ? d : 0), ddz(order >= 2 ? d : 0);
    for (int j = 0; j < d && order >= 1; ++j) dz[j] = net.weights[l] * da[j];
    for (int j = 0; j < d && order >= 2; ++j) ddz[j] = net.weights[l] * dda[j];

    if (l + 1 < layers) {
      const double alpha = M_PI * net.betas[l];
      Eigen::MatrixXd s = (alpha * z.array()).sin();
      Eigen::MatrixXd c = (alpha * z.array()).cos();
      a = s;
      for (int j = 0; j < d && order >= 1; ++j) {
        if (order >= 2)
          dda[j] = (-alpha * alpha) * (s.array() * dz[j].array() * dz[j].array()).matrix() +
                   alpha * (c.array() * ddz[j].array()).matrix();
        da[j] = alpha * (c.array() * dz[j].array()).matrix();
      }
      if (tape) {
        tape->z.push_back(std::move(z));
        tape->s.push_back(std::move(s));
        tape->c.push_back(std::move(c));
        tape->dz.push_back(std::move(dz));
        tape->ddz.push_back(std::move(ddz));
      }
    } else {
      a = std::move(z);
      for (int j = 0; j < d && order >= 1; ++j) da[j] = std::move(dz[j]);
      for (int j = 0; j < d && order >= 2; ++j) dda[j] = std::move(ddz[j]);
    }
  }

  MlpEval eval;
  eval.order = order;
  eval.value = std::move(a);
  eval.grad = std::move(da);
  eval.hess = std::move(dda);
  return eval;
}

MlpGrads::MlpGrads(const Mlp& net) {
  weights.resize(net.weights.size());
  biases.resize(net.biases.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights[l].setZero(net.weights[l].rows(), net.weights[l].cols());
    biases[l].setZero(net.biases[l].size());
  }
  betas = Eigen::VectorXd::Zero(net.betas.size());
}

void MlpGrads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
  betas.setZero();
}

void MlpGrads::add(const MlpGrads& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  betas += other.betas;
}

Eigen::VectorXd MlpGrads::pack() const {
  Eigen::Index total = betas.size();
  for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(weights[l].data(), weights[l].size());
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  flat.segment(at, betas.size()) = betas;
  return flat;
}

void mlp_backward(const Mlp& net, const MlpTape& tape, const MlpEval& seed, MlpGrads& grads) {
  const int d = net.input_dim();
  const int layers = net.layer_count();
  const int order = tape.order;

  // adjoints of the current layer's output state
  Eigen::MatrixXd abar = seed.value;
  std::vector<Eigen::MatrixXd> dabar, ddabar;
  if (order >= 1) {
    dabar.resize(d);
    for (int j = 0; j < d; ++j)
      dabar[j] = (static_cast<int>(seed.grad.size()) == d && seed.grad[j].size() > 0)
                     ? seed.grad[j]
                     : Eigen::MatrixXd::Zero(abar.rows(), abar.cols());
  }
  if (order >= 2) {
    ddabar.resize(d);
    for (int j = 0; j < d; ++j)
      ddabar[j] = (static_cast<int>(seed.hess.size()) == d && seed.hess[j].size() > 0)
                      ? seed.hess[j]
                      : Eigen::MatrixXd::Zero(abar.rows(), abar.cols());
  }

  for (int l = layers - 1; l >= 0; --l) {
    Eigen::MatrixXd zbar;
    std::vector<Eigen::MatrixXd> dzbar(order >= 1 ? d : 0), ddzbar(order >= 2 ? d : 0);

    if (l == layers - 1) {
      // linear output layer: out = z, dout = dz, ddout = ddz
      zbar = std::move(abar);
      for (int j = 0; j < d && order >= 1; ++j) dzbar[j] = std::move(dabar[j]);
      for (int j = 0; j < d && order >= 2; ++j) ddzbar[j] = std::move(ddabar[j]);
    } else {
      const double alpha = M_PI * net.betas[l];
      const Eigen::MatrixXd& z = tape.z[l];
      const Eigen::MatrixXd& s = tape.s[l];
      const Eigen::MatrixXd& c = tape.c[l];
      const auto& dz = tape.dz[l];
      const auto& ddz = tape.ddz[l];

      // uses of s, c in: a = s; da_j = alpha c.dz_j;
      // dda_j = -alpha^2 s.dz_j.dz_j + alpha c.ddz_j
      Eigen::ArrayXXd sbar = abar.array();
      Eigen::ArrayXXd cbar = Eigen::ArrayXXd::Zero(abar.rows(), abar.cols());
      double alphabar = 0.0;

      for (int j = 0; j < d && order >= 1; ++j) {
        const auto dzj = dz[j].array();
        const auto dabarj = dabar[j].array();
        cbar += alpha * dabarj * dzj;
        alphabar += (dabarj * c.array() * dzj).sum();
        dzbar[j] = (alpha * dabarj * c.array()).matrix();
      }
      for (int j = 0; j < d && order >= 2; ++j) {
        const auto dzj = dz[j].array();
        const auto ddzj = ddz[j].array();
        const auto ddabarj = ddabar[j].array();
        sbar += (-alpha * alpha) * ddabarj * dzj * dzj;
        cbar += alpha * ddabarj * ddzj;
        alphabar += (ddabarj * (-2.0 * alpha * s.array() * dzj * dzj + c.array() * ddzj)).sum();
        dzbar[j] += (-2.0 * alpha * alpha) * (ddabarj * s.array() * dzj).matrix();
        ddzbar[j] = (alpha * ddabarj * c.array()).matrix();
      }

      // s = sin(alpha z), c = cos(alpha z)
      zbar = (alpha * (sbar * c.array() - cbar * s.array())).matrix();
      alphabar += (sbar * z.array() * c.array() - cbar * z.array() * s.array()).sum();
      grads.betas[l] += M_PI * alphabar;
    }

    // z = W a_in + b; dz_j = W da_in_j; ddz_j = W dda_in_j
    const Eigen::MatrixXd& a_in = tape.a[l];
    grads.weights[l].noalias() += zbar * a_in.transpose();
    grads.biases[l] += zbar.rowwise().sum();
    for (int j = 0; j < d && order >= 1; ++j)
      grads.weights[l].noalias() += dzbar[j] * tape.da[l][j].transpose();
    for (int j = 0; j < d && order >= 2; ++j)
      grads.weights[l].noalias() += ddzbar[j] * tape.dda[l][j].transpose();

    if (l > 0) {
      abar = net.weights[l].transpose() * zbar;
      for (int j = 0; j < d && order >= 1; ++j)
        dabar[j] = net.weights[l].transpose() * dzbar[j];
      for (int j = 0; j < d && order >= 2; ++j)
        ddabar[j] = net.weights[l].transpose() * ddzbar[j];
    }
  }
}

double mlp_loss_gradient(const Mlp& net, const Eigen::MatrixXd& inputs, int order,
                         const BatchLossFn& loss, Eigen::VectorXd& grad_out) {
  MlpTape tape;
  MlpEval eval = mlp_eval(net, inputs, order, &tape);
  MlpEval adjoint;
  adjoint.order = order;
  adjoint.value.setZero(eval.value.rows(), eval.value.cols());
  if (order >= 1) adjoint.grad.assign(net.input_dim(), adjoint.value);
  if (order >= 2) adjoint.hess.assign(net.input_dim(), adjoint.value);
  const double total = loss(eval, adjoint);
  MlpGrads grads(net);
  mlp_backward(net, tape, adjoint, grads);
  grad_out = grads.pack();
  return total;
}

}  // namespace pbf
