#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pbf/rng.hpp"

namespace pbf {

// Dense network with sine hidden activations x -> sin(pi * beta * x), one
// trainable frequency beta per hidden layer, linear output layer.
struct Mlp {
  std::vector<int> sizes;               // input .. output
  std::vector<Eigen::MatrixXd> weights; // layer l: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd betas;                // one per hidden layer

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  int hidden_count() const { return layer_count() - 1; }
  Eigen::Index parameter_count() const;

  // scaled-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
  // betas = 1
  void init_params(Rng& rng);

  // flat parameter vector: per layer weights (column-major) then bias, in
  // layer order, followed by all betas
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& flat);

  // plain forward; inputs are columns of a (input_dim x batch) matrix
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd forward_one(const Eigen::VectorXd& input) const;
};

// Network outputs plus exact derivatives with respect to each input axis.
// order 0: value only; 1: + gradient; 2: + diagonal second derivatives.
// All matrices are (output_dim x batch); grad[j] is d(out)/d(in_j).
struct MlpEval {
  int order = 0;
  Eigen::MatrixXd value;
  std::vector<Eigen::MatrixXd> grad;
  std::vector<Eigen::MatrixXd> hess;
};

// Cached layer states for the reverse pass.
struct MlpTape {
  int order = 0;
  Eigen::MatrixXd input;
  // hidden layer l caches: preactivation state and its trig values
  std::vector<Eigen::MatrixXd> z, s, c;             // [hidden]
  std::vector<std::vector<Eigen::MatrixXd>> dz, ddz; // [hidden][input_dim]
  // activations entering each weight layer (a[0] == input)
  std::vector<Eigen::MatrixXd> a;                    // [layers]
  std::vector<std::vector<Eigen::MatrixXd>> da, dda; // [layers][input_dim]
};

// Forward with exact derivative propagation. Pass a tape to enable a later
// backward pass.
MlpEval mlp_eval(const Mlp& net, const Eigen::MatrixXd& inputs, int order,
                 MlpTape* tape = nullptr);

// Parameter gradient accumulator, same shapes as the model.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd betas;

  explicit MlpGrads(const Mlp& net);
  void set_zero();
  void add(const MlpGrads& other);
  Eigen::VectorXd pack() const;
};

// Reverse pass: seeds are dLoss/d(value), dLoss/d(grad[j]), dLoss/d(hess[j])
// (fields above seed.order are ignored). Accumulates parameter gradients;
// differentiates through the first/second derivative computation, so losses
// may depend on all of value, gradient and diagonal Hessian.
void mlp_backward(const Mlp& net, const MlpTape& tape, const MlpEval& seed, MlpGrads& grads);

// Convenience for tests and simple trainers: total loss plus its parameter
// gradient for a pointwise loss over one batch. The loss callback receives
// the evaluation and must fill the adjoint seeds.
using BatchLossFn = std::function<double(const MlpEval& eval, MlpEval& adjoint)>;
double mlp_loss_gradient(const Mlp& net, const Eigen::MatrixXd& inputs, int order,
                         const BatchLossFn& loss, Eigen::VectorXd& grad_out);

}  // namespace pbf
