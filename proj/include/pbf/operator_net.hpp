#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pbf/pinn.hpp"

namespace pbf {

// Branch/trunk operator model with the enriched combination layer: the
// plain dot product is augmented with elementwise sum and difference terms,
// each reduced through its own bias-free linear layer (the root net).
struct EnDeepOnetModel {
  Mlp branch;  // input 2m (path encoding), output p
  Mlp trunk;   // input 4 (t,x,y,z), output p
  Eigen::VectorXd w_prod, w_sum, w_diff;  // root weights, length p
  NormalizationSpec norm;                  // trunk inputs + output map
  Eigen::VectorXd path_center, path_halfwidth;  // branch input map, length 2m

  int latent_dim() const { return trunk.output_dim(); }
  int encoding_dim() const { return branch.input_dim(); }

  Eigen::Index parameter_count() const;
  // flat layout: [trunk | branch | w_prod | w_sum | w_diff]
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& flat);

  Eigen::VectorXd normalize_encoding(const Eigen::VectorXd& encoding) const;
};

// Plain DeepONet readout: sum_k branch_k * trunk_k, un-normalized to Kelvin.
double deeponet_forward(const EnDeepOnetModel& model, const Eigen::VectorXd& encoding,
                        const Eigen::Vector4d& query);

// Enriched readout: sum_k [w_prod_k B_k T_k + w_sum_k (B_k + T_k) +
// w_diff_k (B_k - T_k)], un-normalized to Kelvin.
double endeeponet_forward(const EnDeepOnetModel& model, const Eigen::VectorXd& encoding,
                          const Eigen::Vector4d& query);

// Strong-form residual at one point; derivatives are taken with respect to
// the trunk (query) inputs only, the encoding being constant per scenario.
double pde_residual_operator(const EnDeepOnetModel& model, const Eigen::VectorXd& encoding,
                             const MaterialParams& material, const Scenario& scenario,
                             const LaserParams& laser, const Eigen::Vector4d& point);

// A trained operator model bound to one scenario's encoding.
class OperatorSurrogate final : public TemperatureSurrogate {
 public:
  OperatorSurrogate(const EnDeepOnetModel& model, Eigen::VectorXd encoding);
  double temperature(double t, double x, double y, double z) const override;
  Eigen::VectorXd temperature_batch(const Eigen::MatrixXd& queries) const override;

 private:
  const EnDeepOnetModel* model_;
  Eigen::VectorXd unit_encoding_;
  Eigen::VectorXd branch_out_;   // cached, encoding is frozen
  Eigen::VectorXd gamma_;        // w_prod .* B + w_sum - w_diff
  double constant_;              // sum(w_sum .* B) + sum(w_diff .* B)
};

struct OperatorConfig {
  int latent_dim = 64;
  int path_samples = 30;  // m
  int branch_hidden_layers = 2;
  int branch_hidden_width = 64;
};

struct OperatorTrainingResult {
  EnDeepOnetModel model;
  std::vector<Eigen::VectorXd> encodings;  // per scenario, physical units
  TrainingMeta meta;
  std::vector<TrainingRecord> trace;
};

// Physics-informed training over several scenarios at once: every scenario
// contributes its own collocation sets (one shared Sobol stream, distinct
// offsets), losses are averaged over scenarios and the lambda weights are
// captured once from the pooled initial losses.
OperatorTrainingResult train_endeeponet(const PinnProblem& shared_problem,
                                        const std::vector<Scenario>& scenarios,
                                        const TrainingConfig& training,
                                        const OperatorConfig& op_config, std::uint64_t seed);

// bundle directory: branch.pbfm, trunk.pbfm, bundle.json (root weights,
// normalizations, scenario manifest)
void save_endeeponet(const OperatorTrainingResult& result, const std::filesystem::path& dir);
OperatorTrainingResult load_endeeponet(const std::filesystem::path& dir);

// Test hook: evaluates the training objective (weights fixed to 1) and its
// gradient at arbitrary flat parameters, on the exact collocation sets the
// trainer would build for this seed.
double operator_objective_probe(const PinnProblem& shared_problem,
                                const std::vector<Scenario>& scenarios,
                                const TrainingConfig& training, const OperatorConfig& op_config,
                                std::uint64_t seed, const Eigen::VectorXd& params,
                                Eigen::VectorXd* grad_out);

}  // namespace pbf
