#include "pbf/operator_net.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pbf/model_io.hpp"
#include "pbf/parallel.hpp"

namespace pbf {

Eigen::Index EnDeepOnetModel::parameter_count() const {
  return trunk.parameter_count() + branch.parameter_count() + 3 * latent_dim();
}

Eigen::VectorXd EnDeepOnetModel::pack() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  flat.segment(at, trunk.parameter_count()) = trunk.pack();
  at += trunk.parameter_count();
  flat.segment(at, branch.parameter_count()) = branch.pack();
  at += branch.parameter_count();
  const int p = latent_dim();
  flat.segment(at, p) = w_prod;
  flat.segment(at + p, p) = w_sum;
  flat.segment(at + 2 * p, p) = w_diff;
  return flat;
}

void EnDeepOnetModel::unpack(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("endeeponet unpack: parameter count mismatch");
  Eigen::Index at = 0;
  trunk.unpack(flat.segment(at, trunk.parameter_count()));
  at += trunk.parameter_count();
  branch.unpack(flat.segment(at, branch.parameter_count()));
  at += branch.parameter_count();
  const int p = latent_dim();
  w_prod = flat.segment(at, p);
  w_sum = flat.segment(at + p, p);
  w_diff = flat.segment(at + 2 * p, p);
}

Eigen::VectorXd EnDeepOnetModel::normalize_encoding(const Eigen::VectorXd& encoding) const {
  if (encoding.size() != path_center.size())
    throw std::invalid_argument("encoding length does not match the branch input");
  return (encoding - path_center).cwiseQuotient(path_halfwidth);
}

namespace {

// readout coefficients for a frozen branch output:
// y = gamma . T + constant, gamma = w_prod.*B + w_sum - w_diff
Eigen::VectorXd readout_gamma(const EnDeepOnetModel& m, const Eigen::VectorXd& branch_out) {
  return (m.w_prod.array() * branch_out.array()).matrix() + m.w_sum - m.w_diff;
}

double readout_constant(const EnDeepOnetModel& m, const Eigen::VectorXd& branch_out) {
  return (m.w_sum + m.w_diff).dot(branch_out);
}

}  // namespace

double deeponet_forward(const EnDeepOnetModel& model, const Eigen::VectorXd& encoding,
                        const Eigen::Vector4d& query) {
  Eigen::VectorXd b = model.branch.forward_one(model.normalize_encoding(encoding));
  Eigen::VectorXd t = model.trunk.forward_one(model.norm.to_unit(query));
  return model.norm.to_kelvin(b.dot(t));
}

double endeeponet_forward(const EnDeepOnetModel& model, const Eigen::VectorXd& encoding,
                          const Eigen::Vector4d& query) {
  Eigen::VectorXd b = model.branch.forward_one(model.normalize_encoding(encoding));
  Eigen::VectorXd t = model.trunk.forward_one(model.norm.to_unit(query));
  const double y = readout_gamma(model, b).dot(t) + readout_constant(model, b);
  return model.norm.to_kelvin(y);
}

double pde_residual_operator(const EnDeepOnetModel& model, const Eigen::VectorXd& encoding,
                             const MaterialParams& material, const Scenario& scenario,
                             const LaserParams& laser, const Eigen::Vector4d& point) {
  Eigen::VectorXd b = model.branch.forward_one(model.normalize_encoding(encoding));
  Eigen::VectorXd gamma = readout_gamma(model, b);
  const double constant = readout_constant(model, b);
  MlpEval ev = mlp_eval(model.trunk, model.norm.to_unit(point), 2);

  const NormalizationSpec& n = model.norm;
  PointDerivatives d;
  d.value = n.to_kelvin(gamma.dot(ev.value.col(0)) + constant);
  d.dt = gamma.dot(ev.grad[0].col(0)) * n.first_derivative_factor(0);
  d.dx = gamma.dot(ev.grad[1].col(0)) * n.first_derivative_factor(1);
  d.dy = gamma.dot(ev.grad[2].col(0)) * n.first_derivative_factor(2);
  d.dz = gamma.dot(ev.grad[3].col(0)) * n.first_derivative_factor(3);
  d.dxx = gamma.dot(ev.hess[1].col(0)) * n.second_derivative_factor(1);
  d.dyy = gamma.dot(ev.hess[2].col(0)) * n.second_derivative_factor(2);
  d.dzz = gamma.dot(ev.hess[3].col(0)) * n.second_derivative_factor(3);

  double qv = 0.0;
  if (point[0] <= scenario.total_duration())
    qv = heat_source(point[1], point[2], point[3], point[0], scenario, laser);
  return pde_residual_from_derivatives(material, d, qv);
}

OperatorSurrogate::OperatorSurrogate(const EnDeepOnetModel& model, Eigen::VectorXd encoding)
    : model_(&model), unit_encoding_(model.normalize_encoding(encoding)) {
  branch_out_ = model.branch.forward_one(unit_encoding_);
  gamma_ = readout_gamma(model, branch_out_);
  constant_ = readout_constant(model, branch_out_);
}

double OperatorSurrogate::temperature(double t, double x, double y, double z) const {
  Eigen::VectorXd tr = model_->trunk.forward_one(model_->norm.to_unit({t, x, y, z}));
  return model_->norm.to_kelvin(gamma_.dot(tr) + constant_);
}

Eigen::VectorXd OperatorSurrogate::temperature_batch(const Eigen::MatrixXd& queries) const {
  Eigen::MatrixXd tr = model_->trunk.forward(model_->norm.to_unit_batch(queries));
  Eigen::VectorXd y = (gamma_.transpose() * tr).transpose();
  return (y.array() + constant_) * model_->norm.out_scale +
         Eigen::ArrayXd::Constant(y.size(), model_->norm.out_offset);
}

// ---------------------------------------------------------------------------
// training

namespace {

struct ScenarioData {
  Scenario scenario;
  Eigen::VectorXd encoding;       // physical
  Eigen::VectorXd unit_encoding;  // branch input
  CollocationSet colloc;
  Eigen::VectorXd qv;          // per interior point
  Eigen::VectorXd ic_targets;  // Kelvin
};

struct OpTask {
  enum class Group { Pde, Ic, Face } group = Group::Pde;
  int scenario = 0;
  int face = 0;
  Eigen::Index begin = 0, end = 0;
};

struct OpTaskResult {
  LossBreakdown loss;
  MlpGrads trunk_grads;
  Eigen::VectorXd gamma_bar;  // d(total)/d(gamma), this scenario's share
  double const_bar = 0.0;

  OpTaskResult(const Mlp& trunk, int p)
      : trunk_grads(trunk), gamma_bar(Eigen::VectorXd::Zero(p)) {}
};

class OperatorObjective {
 public:
  OperatorObjective(const PinnProblem& problem, const TrainingConfig& config,
                    std::vector<ScenarioData> scenarios, NormalizationSpec norm)
      : problem_(problem), config_(config), scenarios_(std::move(scenarios)), norm_(norm) {
    const Eigen::Index bs = config_.block_size;
    for (int s = 0; s < static_cast<int>(scenarios_.size()); ++s) {
      auto add = [&](OpTask::Group g, int face, Eigen::Index n) {
        for (Eigen::Index b = 0; b < n; b += bs)
          tasks_.push_back(OpTask{g, s, face, b, std::min(n, b + bs)});
      };
      add(OpTask::Group::Pde, 0, scenarios_[s].colloc.interior.cols());
      add(OpTask::Group::Ic, 0, scenarios_[s].colloc.initial.cols());
      for (int f = 0; f < 6; ++f)
        add(OpTask::Group::Face, f, scenarios_[s].colloc.boundary[f].cols());
    }
  }

  LossBreakdown losses(const EnDeepOnetModel& model) const {
    LossBreakdown out;
    run(model, LossWeights{}, nullptr, &out);
    return out;
  }

  double loss_and_gradient(const EnDeepOnetModel& model, const LossWeights& weights,
                           Eigen::VectorXd& grad_out, LossBreakdown* breakdown) const {
    return run(model, weights, &grad_out, breakdown);
  }

 private:
  double run(const EnDeepOnetModel& model, const LossWeights& weights,
             Eigen::VectorXd* grad_out, LossBreakdown* breakdown) const;

  PinnProblem problem_;
  TrainingConfig config_;
  std::vector<ScenarioData> scenarios_;
  NormalizationSpec norm_;
  std::vector<OpTask> tasks_;
};

double OperatorObjective::run(const EnDeepOnetModel& model, const LossWeights& weights,
                              Eigen::VectorXd* grad_out, LossBreakdown* breakdown) const {
  const bool with_grad = grad_out != nullptr;
  const int p = model.latent_dim();
  const int n_scen = static_cast<int>(scenarios_.size());
  const double scen_norm = static_cast<double>(n_scen);

  // branch outputs are shared by every point of a scenario
  std::vector<Eigen::VectorXd> branch_out(n_scen), gamma(n_scen);
  std::vector<double> constant(n_scen);
  std::vector<MlpTape> branch_tapes(n_scen);
  for (int s = 0; s < n_scen; ++s) {
    MlpEval ev = mlp_eval(model.branch, scenarios_[s].unit_encoding, 0,
                          with_grad ? &branch_tapes[s] : nullptr);
    branch_out[s] = ev.value.col(0);
    gamma[s] = readout_gamma(model, branch_out[s]);
    constant[s] = readout_constant(model, branch_out[s]);
  }

  std::vector<OpTaskResult> partials;
  partials.reserve(tasks_.size());
  for (std::size_t i = 0; i < tasks_.size(); ++i) partials.emplace_back(model.trunk, p);

  auto run_task = [&](std::size_t ti, std::size_t, std::size_t) {
    const OpTask& task = tasks_[ti];
    const ScenarioData& sd = scenarios_[task.scenario];
    const Eigen::VectorXd& g_vec = gamma[task.scenario];
    const double c_val = constant[task.scenario];
    OpTaskResult& out = partials[ti];
    const Eigen::Index count = task.end - task.begin;

    auto seed_rank1 = [&](MlpEval& seed, const MlpEval& ev,
                          const Eigen::VectorXd& ybar_v,
                          const std::array<Eigen::VectorXd, 4>* gbar_v,
                          const std::array<Eigen::VectorXd, 4>* hbar_v) {
      seed.value.noalias() = g_vec * ybar_v.transpose();
      out.gamma_bar.noalias() += ev.value * ybar_v;
      out.const_bar += ybar_v.sum();
      if (gbar_v) {
        for (int j = 0; j < 4; ++j) {
          seed.grad[j].noalias() = g_vec * (*gbar_v)[j].transpose();
          out.gamma_bar.noalias() += ev.grad[j] * (*gbar_v)[j];
        }
      }
      if (hbar_v) {
        for (int j = 1; j < 4; ++j) {
          seed.hess[j].noalias() = g_vec * (*hbar_v)[j].transpose();
          out.gamma_bar.noalias() += ev.hess[j] * (*hbar_v)[j];
        }
      }
    };

    if (task.group == OpTask::Group::Pde) {
      const double n_pde = static_cast<double>(sd.colloc.interior.cols()) * scen_norm;
      Eigen::MatrixXd unit = norm_.to_unit_batch(sd.colloc.interior.middleCols(task.begin, count));
      MlpTape tape;
      MlpEval ev = mlp_eval(model.trunk, unit, 2, with_grad ? &tape : nullptr);
      Eigen::VectorXd ybar(count);
      std::array<Eigen::VectorXd, 4> gbar, hbar;
      for (auto& v : gbar) v.setZero(count);
      for (auto& v : hbar) v.setZero(count);
      for (Eigen::Index q = 0; q < count; ++q) {
        PointDerivatives d;
        d.value = norm_.to_kelvin(g_vec.dot(ev.value.col(q)) + c_val);
        d.dt = g_vec.dot(ev.grad[0].col(q)) * norm_.first_derivative_factor(0);
        d.dx = g_vec.dot(ev.grad[1].col(q)) * norm_.first_derivative_factor(1);
        d.dy = g_vec.dot(ev.grad[2].col(q)) * norm_.first_derivative_factor(2);
        d.dz = g_vec.dot(ev.grad[3].col(q)) * norm_.first_derivative_factor(3);
        d.dxx = g_vec.dot(ev.hess[1].col(q)) * norm_.second_derivative_factor(1);
        d.dyy = g_vec.dot(ev.hess[2].col(q)) * norm_.second_derivative_factor(2);
        d.dzz = g_vec.dot(ev.hess[3].col(q)) * norm_.second_derivative_factor(3);
        const double r = pde_residual_from_derivatives(problem_.material, d,
                                                       sd.qv[task.begin + q]);
        out.loss.pde += r * r / n_pde;
        if (with_grad) {
          const ResidualPartials rp = pde_residual_partials(problem_.material, d);
          const double w = 2.0 * weights.pde * r / n_pde;
          ybar[q] = w * rp.dT * norm_.out_scale;
          gbar[0][q] = w * rp.dTt * norm_.first_derivative_factor(0);
          gbar[1][q] = w * rp.dTx * norm_.first_derivative_factor(1);
          gbar[2][q] = w * rp.dTy * norm_.first_derivative_factor(2);
          gbar[3][q] = w * rp.dTz * norm_.first_derivative_factor(3);
          hbar[1][q] = w * rp.dTxx * norm_.second_derivative_factor(1);
          hbar[2][q] = w * rp.dTyy * norm_.second_derivative_factor(2);
          hbar[3][q] = w * rp.dTzz * norm_.second_derivative_factor(3);
        }
      }
      if (with_grad) {
        MlpEval seed;
        seed.order = 2;
        seed.value.resize(p, count);
        seed.grad.assign(4, Eigen::MatrixXd::Zero(p, count));
        seed.hess.assign(4, Eigen::MatrixXd::Zero(p, count));
        seed_rank1(seed, ev, ybar, &gbar, &hbar);
        mlp_backward(model.trunk, tape, seed, out.trunk_grads);
      }
      return;
    }

    if (task.group == OpTask::Group::Ic) {
      const double n_ic = static_cast<double>(sd.colloc.initial.cols()) * scen_norm;
      Eigen::MatrixXd pts(4, count);
      pts.row(0).setConstant(problem_.box.t_begin);
      pts.bottomRows(3) = sd.colloc.initial.middleCols(task.begin, count);
      Eigen::MatrixXd unit = norm_.to_unit_batch(pts);
      MlpTape tape;
      MlpEval ev = mlp_eval(model.trunk, unit, 0, with_grad ? &tape : nullptr);
      Eigen::VectorXd ybar = Eigen::VectorXd::Zero(count);
      for (Eigen::Index q = 0; q < count; ++q) {
        const double mismatch = norm_.to_kelvin(g_vec.dot(ev.value.col(q)) + c_val) -
                                sd.ic_targets[task.begin + q];
        out.loss.ic += mismatch * mismatch / n_ic;
        if (with_grad) ybar[q] = 2.0 * weights.ic * mismatch / n_ic * norm_.out_scale;
      }
      if (with_grad) {
        MlpEval seed;
        seed.order = 0;
        seed.value.resize(p, count);
        seed_rank1(seed, ev, ybar, nullptr, nullptr);
        mlp_backward(model.trunk, tape, seed, out.trunk_grads);
      }
      return;
    }

    const Face face = static_cast<Face>(task.face);
    const FaceCondition& cond = problem_.bc[face];
    const double n_face = static_cast<double>(sd.colloc.boundary[task.face].cols()) * scen_norm;
    Eigen::MatrixXd unit =
        norm_.to_unit_batch(sd.colloc.boundary[task.face].middleCols(task.begin, count));
    const bool needs_grad = cond.kind != FaceCondition::Kind::Dirichlet;
    MlpTape tape;
    MlpEval ev = mlp_eval(model.trunk, unit, needs_grad ? 1 : 0, with_grad ? &tape : nullptr);
    const int axis = face_axis(face);
    const double nsign = face_normal_sign(face);
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(count);
    std::array<Eigen::VectorXd, 4> gbar;
    for (auto& v : gbar) v.setZero(count);
    for (Eigen::Index q = 0; q < count; ++q) {
      const double temp = norm_.to_kelvin(g_vec.dot(ev.value.col(q)) + c_val);
      if (cond.kind == FaceCondition::Kind::Dirichlet) {
        const double mismatch = temp - cond.value;
        out.loss.bc += mismatch * mismatch / n_face;
        if (with_grad) ybar[q] = 2.0 * weights.bc * mismatch / n_face * norm_.out_scale;
        continue;
      }
      const double grad_axis =
          g_vec.dot(ev.grad[axis + 1].col(q)) * norm_.first_derivative_factor(axis + 1);
      const double normal_grad = nsign * grad_axis;
      FaceResidual fr = (cond.kind == FaceCondition::Kind::Insulated)
                            ? neumann_residual(normal_grad, 0.0)
                            : convective_residual(problem_.material, temp, normal_grad,
                                                  cond.h, cond.t_inf);
      out.loss.bc += fr.value * fr.value / n_face;
      if (with_grad) {
        const double w = 2.0 * weights.bc * fr.value / n_face;
        ybar[q] = w * fr.dT * norm_.out_scale;
        gbar[axis + 1][q] = w * fr.dGn * nsign * norm_.first_derivative_factor(axis + 1);
      }
    }
    if (with_grad) {
      MlpEval seed;
      seed.order = needs_grad ? 1 : 0;
      seed.value.resize(p, count);
      if (needs_grad) seed.grad.assign(4, Eigen::MatrixXd::Zero(p, count));
      seed_rank1(seed, ev, ybar, needs_grad ? &gbar : nullptr, nullptr);
      mlp_backward(model.trunk, tape, seed, out.trunk_grads);
    }
  };

  parallel_for_blocks(tasks_.size(), 1, run_task);

  LossBreakdown total;
  for (const OpTaskResult& part : partials) {
    total.ic += part.loss.ic;
    total.bc += part.loss.bc;
    total.pde += part.loss.pde;
  }

  if (with_grad) {
    MlpGrads trunk_grads(model.trunk);
    for (const OpTaskResult& part : partials) trunk_grads.add(part.trunk_grads);

    // per-scenario reductions feed the root weights and the branch
    std::vector<Eigen::VectorXd> gamma_bar(n_scen, Eigen::VectorXd::Zero(p));
    std::vector<double> const_bar(n_scen, 0.0);
    for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
      gamma_bar[tasks_[ti].scenario] += partials[ti].gamma_bar;
      const_bar[tasks_[ti].scenario] += partials[ti].const_bar;
    }

    Eigen::VectorXd w_prod_bar = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd w_sum_bar = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd w_diff_bar = Eigen::VectorXd::Zero(p);
    MlpGrads branch_grads(model.branch);
    for (int s = 0; s < n_scen; ++s) {
      const Eigen::VectorXd& b = branch_out[s];
      w_prod_bar += gamma_bar[s].cwiseProduct(b);
      w_sum_bar += gamma_bar[s] + const_bar[s] * b;
      w_diff_bar += -gamma_bar[s] + const_bar[s] * b;
      // branch adjoint: gamma = w_prod.*B + ..., const = (w_sum + w_diff).B
      Eigen::VectorXd b_bar = gamma_bar[s].cwiseProduct(model.w_prod) +
                              const_bar[s] * (model.w_sum + model.w_diff);
      MlpEval seed;
      seed.order = 0;
      seed.value = b_bar;
      mlp_backward(model.branch, branch_tapes[s], seed, branch_grads);
    }

    grad_out->resize(model.parameter_count());
    Eigen::Index at = 0;
    grad_out->segment(at, model.trunk.parameter_count()) = trunk_grads.pack();
    at += model.trunk.parameter_count();
    grad_out->segment(at, model.branch.parameter_count()) = branch_grads.pack();
    at += model.branch.parameter_count();
    grad_out->segment(at, p) = w_prod_bar;
    grad_out->segment(at + p, p) = w_sum_bar;
    grad_out->segment(at + 2 * p, p) = w_diff_bar;
  }

  if (breakdown) *breakdown = total;
  return total.weighted(weights);
}

}  // namespace

namespace {

struct OperatorSetup {
  EnDeepOnetModel model;
  std::vector<ScenarioData> data;
  NormalizationSpec norm;
};

OperatorSetup build_operator_setup(const PinnProblem& shared_problem,
                                   const std::vector<Scenario>& scenarios,
                                   const TrainingConfig& training,
                                   const OperatorConfig& op_config, std::uint64_t seed) {
  training.validate();
  shared_problem.box.validate();
  if (scenarios.empty()) throw std::invalid_argument("train_endeeponet: no scenarios");
  const double duration = scenarios.front().total_duration();
  for (const Scenario& s : scenarios)
    if (std::abs(s.total_duration() - duration) > 1e-12)
      throw std::invalid_argument("train_endeeponet: scenarios must share duration");

  OperatorSetup setup;
  setup.norm =
      shared_problem.box.make_normalization(shared_problem.initial_temperature, training.t_scale);

  const int m = op_config.path_samples;
  ClusteringConfig clustering{training.cluster_fraction,
                              training.cluster_radius_factor * shared_problem.laser.radius};

  // branch input map from the workpiece bounding box
  Eigen::VectorXd path_center(2 * m), path_halfwidth(2 * m);
  for (int k = 0; k < m; ++k) {
    path_center[2 * k] = 0.5 * (shared_problem.box.lo.x() + shared_problem.box.hi.x());
    path_center[2 * k + 1] = 0.5 * (shared_problem.box.lo.y() + shared_problem.box.hi.y());
    path_halfwidth[2 * k] = 0.5 * (shared_problem.box.hi.x() - shared_problem.box.lo.x());
    path_halfwidth[2 * k + 1] = 0.5 * (shared_problem.box.hi.y() - shared_problem.box.lo.y());
  }

  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    ScenarioData sd;
    sd.scenario = scenarios[i];
    sd.encoding = encode_path(scenarios[i], m);
    sd.unit_encoding = (sd.encoding - path_center).cwiseQuotient(path_halfwidth);
    // one shared low-discrepancy stream, scenario-sized offsets
    sd.colloc = sample_collocation(shared_problem.box, training.collocation, &scenarios[i],
                                   clustering, derive_seed(seed, "colloc-" + scenarios[i].name()),
                                   i * static_cast<std::uint64_t>(training.collocation.n_pde));
    sd.qv.resize(sd.colloc.interior.cols());
    for (Eigen::Index q = 0; q < sd.colloc.interior.cols(); ++q)
      sd.qv[q] = heat_source(sd.colloc.interior(1, q), sd.colloc.interior(2, q),
                             sd.colloc.interior(3, q), sd.colloc.interior(0, q), scenarios[i],
                             shared_problem.laser);
    sd.ic_targets =
        Eigen::VectorXd::Constant(sd.colloc.initial.cols(), shared_problem.initial_temperature);
    setup.data.push_back(std::move(sd));
  }

  EnDeepOnetModel& model = setup.model;
  model.norm = setup.norm;
  model.path_center = path_center;
  model.path_halfwidth = path_halfwidth;
  const int p = op_config.latent_dim;
  model.trunk = Mlp(training.layer_sizes(4, p));
  std::vector<int> branch_sizes;
  branch_sizes.push_back(2 * m);
  for (int l = 0; l < op_config.branch_hidden_layers; ++l)
    branch_sizes.push_back(op_config.branch_hidden_width);
  branch_sizes.push_back(p);
  model.branch = Mlp(branch_sizes);
  Rng trunk_rng(derive_seed(seed, "trunk"));
  Rng branch_rng(derive_seed(seed, "branch"));
  model.trunk.init_params(trunk_rng);
  model.branch.init_params(branch_rng);
  // the initial readout is a plain DeepONet: product weights only
  model.w_prod = Eigen::VectorXd::Constant(p, 1.0 / p);
  model.w_sum = Eigen::VectorXd::Zero(p);
  model.w_diff = Eigen::VectorXd::Zero(p);
  return setup;
}

}  // namespace

double operator_objective_probe(const PinnProblem& shared_problem,
                                const std::vector<Scenario>& scenarios,
                                const TrainingConfig& training, const OperatorConfig& op_config,
                                std::uint64_t seed, const Eigen::VectorXd& params,
                                Eigen::VectorXd* grad_out) {
  OperatorSetup setup =
      build_operator_setup(shared_problem, scenarios, training, op_config, seed);
  setup.model.unpack(params);
  OperatorObjective objective(shared_problem, training, std::move(setup.data), setup.norm);
  if (grad_out) return objective.loss_and_gradient(setup.model, LossWeights{}, *grad_out, nullptr);
  return objective.losses(setup.model).weighted(LossWeights{});
}

OperatorTrainingResult train_endeeponet(const PinnProblem& shared_problem,
                                        const std::vector<Scenario>& scenarios,
                                        const TrainingConfig& training,
                                        const OperatorConfig& op_config, std::uint64_t seed) {
  const auto wall_start = std::chrono::steady_clock::now();
  OperatorSetup setup =
      build_operator_setup(shared_problem, scenarios, training, op_config, seed);
  EnDeepOnetModel model = std::move(setup.model);
  NormalizationSpec norm = setup.norm;

  OperatorObjective objective(shared_problem, training, std::move(setup.data), norm);

  const LossBreakdown initial = objective.losses(model);
  const LossWeights lambda = capture_weights(initial);

  EnDeepOnetModel work = model;
  LossBreakdown last;
  auto lbfgs_objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    work.unpack(x);
    return objective.loss_and_gradient(work, lambda, grad, &last);
  };

  OperatorTrainingResult result;
  result.trace.push_back(
      {0, initial.ic, initial.bc, initial.pde, initial.weighted(lambda)});
  auto on_iteration = [&](int iteration, double total) {
    result.trace.push_back({iteration, last.ic, last.bc, last.pde, total});
  };

  Eigen::VectorXd start = model.pack();
  if (training.warmup_iterations > 0)
    start = gradient_descent(lbfgs_objective, std::move(start), training.warmup_iterations);
  LbfgsResult lr = lbfgs_minimize(lbfgs_objective, std::move(start), training.lbfgs,
                                  on_iteration);

  result.model = model;
  result.model.unpack(lr.x);
  for (const Scenario& s : scenarios)
    result.encodings.push_back(encode_path(s, op_config.path_samples));
  result.meta.seed = seed;
  result.meta.lambda = lambda;
  result.meta.initial_losses = initial;
  result.meta.final_losses = objective.losses(result.model);
  result.meta.iterations = lr.iterations;
  result.meta.evaluations = lr.evaluations;
  result.meta.status = to_string(lr.status);
  result.meta.degraded = lr.status == LbfgsStatus::LineSearchFailed;
  result.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  if (result.meta.degraded)
    std::fprintf(stderr, "warning: operator line search failed; best-so-far model returned\n");
  return result;
}

void save_endeeponet(const OperatorTrainingResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_mlp(result.model.branch, dir / "branch.pbfm");
  save_mlp(result.model.trunk, dir / "trunk.pbfm");
  nlohmann::json encodings = nlohmann::json::array();
  for (const Eigen::VectorXd& e : result.encodings)
    encodings.push_back(std::vector<double>(e.data(), e.data() + e.size()));
  nlohmann::json bundle = {
      {"kind", "endeeponet"},
      {"normalization", to_json(result.model.norm)},
      {"path_center", std::vector<double>(result.model.path_center.data(),
                                          result.model.path_center.data() +
                                              result.model.path_center.size())},
      {"path_halfwidth", std::vector<double>(result.model.path_halfwidth.data(),
                                             result.model.path_halfwidth.data() +
                                                 result.model.path_halfwidth.size())},
      {"w_prod", std::vector<double>(result.model.w_prod.data(),
                                     result.model.w_prod.data() + result.model.w_prod.size())},
      {"w_sum", std::vector<double>(result.model.w_sum.data(),
                                    result.model.w_sum.data() + result.model.w_sum.size())},
      {"w_diff", std::vector<double>(result.model.w_diff.data(),
                                     result.model.w_diff.data() + result.model.w_diff.size())},
      {"encodings", encodings},
      {"meta", to_json(result.meta)}};
  std::ofstream out(dir / "bundle.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "bundle.json").string());
  out << bundle.dump(2) << "\n";
}

OperatorTrainingResult load_endeeponet(const std::filesystem::path& dir) {
  OperatorTrainingResult result;
  result.model.branch = load_mlp(dir / "branch.pbfm");
  result.model.trunk = load_mlp(dir / "trunk.pbfm");
  std::ifstream in(dir / "bundle.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "bundle.json").string());
  nlohmann::json bundle = nlohmann::json::parse(in);
  result.model.norm = normalization_from_json(bundle.at("normalization"));
  auto vec = [&](const char* key) {
    std::vector<double> v = bundle.at(key).get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), v.size()).eval();
  };
  result.model.path_center = vec("path_center");
  result.model.path_halfwidth = vec("path_halfwidth");
  result.model.w_prod = vec("w_prod");
  result.model.w_sum = vec("w_sum");
  result.model.w_diff = vec("w_diff");
  for (const auto& e : bundle.at("encodings")) {
    std::vector<double> v = e.get<std::vector<double>>();
    result.encodings.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), v.size()).eval());
  }
  result.meta = meta_from_json(bundle.at("meta"));
  if (result.model.branch.output_dim() != result.model.trunk.output_dim())
    throw std::runtime_error("endeeponet bundle: branch/trunk latent width mismatch");
  return result;
}

}  // namespace pbf
