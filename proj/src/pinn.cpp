#include "pbf/pinn.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pbf/parallel.hpp"

namespace pbf {

void TrainingConfig::validate() const {
  if (hidden_layers < 1 || hidden_width < 1)
    throw std::invalid_argument("training: need at least one hidden layer and unit");
  if (cluster_fraction < 0.0 || cluster_fraction > 1.0)
    throw std::invalid_argument("training.cluster_fraction must be in [0, 1]");
  if (!(t_scale > 0.0)) throw std::invalid_argument("training.t_scale must be > 0");
  if (block_size < 8) throw std::invalid_argument("training.block_size must be >= 8");
  lbfgs.validate();
}

std::vector<int> TrainingConfig::layer_sizes(int input_dim, int output_dim) const {
  std::vector<int> sizes;
  sizes.push_back(input_dim);
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(hidden_width);
  sizes.push_back(output_dim);
  return sizes;
}

LossWeights capture_weights(const LossBreakdown& initial_losses) {
  constexpr double eps = 1e-12;
  LossWeights w;
  auto one_over = [](double l0, const char* name) {
    if (l0 < eps) {
      std::fprintf(stderr, "warning: initial %s loss %.3e below clamp threshold; lambda set to 1\n",
                   name, l0);
      return 1.0;
    }
    return 1.0 / l0;
  };
  w.ic = one_over(initial_losses.ic, "IC");
  w.bc = one_over(initial_losses.bc, "BC");
  w.pde = one_over(initial_losses.pde, "PDE");
  return w;
}

double PinnProblem::source(double t, double x, double y, double z) const {
  if (!scenario || t > scenario->total_duration()) return 0.0;
  return heat_source(x, y, z, t, *scenario, laser);
}

double PinnSurrogate::temperature(double t, double x, double y, double z) const {
  Eigen::Vector4d u = norm.to_unit(Eigen::Vector4d(t, x, y, z));
  return norm.to_kelvin(model.forward_one(u)[0]);
}

Eigen::VectorXd PinnSurrogate::temperature_batch(const Eigen::MatrixXd& queries) const {
  Eigen::MatrixXd unit = norm.to_unit_batch(queries);
  Eigen::MatrixXd out = model.forward(unit);
  return (out.row(0).array() * norm.out_scale + norm.out_offset).transpose();
}

double PinnSurrogate::temperature_normalized(const Eigen::Vector4d& unit_input) const {
  return norm.to_kelvin(model.forward_one(unit_input)[0]);
}

PointDerivatives PinnSurrogate::derivatives(double t, double x, double y, double z) const {
  Eigen::Vector4d u = norm.to_unit(Eigen::Vector4d(t, x, y, z));
  MlpEval ev = mlp_eval(model, u, 2);
  PointDerivatives d;
  d.value = norm.to_kelvin(ev.value(0, 0));
  d.dt = ev.grad[0](0, 0) * norm.first_derivative_factor(0);
  d.dx = ev.grad[1](0, 0) * norm.first_derivative_factor(1);
  d.dy = ev.grad[2](0, 0) * norm.first_derivative_factor(2);
  d.dz = ev.grad[3](0, 0) * norm.first_derivative_factor(3);
  d.dxx = ev.hess[1](0, 0) * norm.second_derivative_factor(1);
  d.dyy = ev.hess[2](0, 0) * norm.second_derivative_factor(2);
  d.dzz = ev.hess[3](0, 0) * norm.second_derivative_factor(3);
  return d;
}

double pde_residual(const PinnSurrogate& surrogate, const MaterialParams& material,
                    const Scenario* scenario, const LaserParams& laser,
                    const Eigen::Vector4d& point) {
  PointDerivatives d = surrogate.derivatives(point[0], point[1], point[2], point[3]);
  double qv = 0.0;
  if (scenario && point[0] <= scenario->total_duration())
    qv = heat_source(point[1], point[2], point[3], point[0], *scenario, laser);
  return pde_residual_from_derivatives(material, d, qv);
}

// ---------------------------------------------------------------------------
// objective engine

PinnObjective::PinnObjective(const PinnProblem& problem, const TrainingConfig& config,
                             CollocationSet collocation, NormalizationSpec norm)
    : problem_(problem), config_(config), colloc_(std::move(collocation)), norm_(norm) {
  norm_.validate();

  // cache the heat source at interior points
  qv_.resize(colloc_.interior.cols());
  for (Eigen::Index i = 0; i < colloc_.interior.cols(); ++i)
    qv_[i] = problem_.source(colloc_.interior(0, i), colloc_.interior(1, i),
                             colloc_.interior(2, i), colloc_.interior(3, i));

  // cache initial-condition targets (uniform ambient or frozen predecessor)
  ic_targets_.resize(colloc_.initial.cols());
  if (problem_.predecessor) {
    Eigen::MatrixXd q(4, colloc_.initial.cols());
    q.row(0).setConstant(problem_.box.t_begin);
    q.bottomRows(3) = colloc_.initial;
    ic_targets_ = problem_.predecessor->temperature_batch(q);
  } else {
    ic_targets_.setConstant(problem_.initial_temperature);
  }

  const Eigen::Index bs = config_.block_size;
  auto add_tasks = [&](Task::Group g, int face, Eigen::Index n) {
    for (Eigen::Index b = 0; b < n; b += bs)
      tasks_.push_back(Task{g, face, b, std::min(n, b + bs)});
  };
  add_tasks(Task::Group::Pde, 0, colloc_.interior.cols());
  add_tasks(Task::Group::Ic, 0, colloc_.initial.cols());
  for (int f = 0; f < 6; ++f) add_tasks(Task::Group::Face, f, colloc_.boundary[f].cols());
}

LossBreakdown PinnObjective::losses(const Mlp& model) const {
  LossBreakdown breakdown;
  run(model, LossWeights{}, nullptr, &breakdown);
  return breakdown;
}

double PinnObjective::loss_and_gradient(const Mlp& model, const LossWeights& weights,
                                        Eigen::VectorXd& grad_out,
                                        LossBreakdown* breakdown) const {
  return run(model, weights, &grad_out, breakdown);
}

double PinnObjective::run(const Mlp& model, const LossWeights& weights,
                          Eigen::VectorXd* grad_out, LossBreakdown* breakdown) const {
  const bool with_grad = grad_out != nullptr;
  const int n_tasks = static_cast<int>(tasks_.size());
  std::vector<LossBreakdown> partial_loss(n_tasks);
  std::vector<MlpGrads> partial_grads;
  if (with_grad) partial_grads.assign(n_tasks, MlpGrads(model));

  const double n_pde = static_cast<double>(colloc_.interior.cols());
  const double n_ic = static_cast<double>(colloc_.initial.cols());

  auto run_task = [&](std::size_t ti, std::size_t, std::size_t) {
    const Task& task = tasks_[ti];
    const Eigen::Index count = task.end - task.begin;
    LossBreakdown& loss = partial_loss[ti];

    if (task.group == Task::Group::Pde) {
      Eigen::MatrixXd pts = colloc_.interior.middleCols(task.begin, count);
      Eigen::MatrixXd unit = norm_.to_unit_batch(pts);
      MlpTape tape;
      MlpEval ev = mlp_eval(model, unit, 2, with_grad ? &tape : nullptr);
      MlpEval seed;
      seed.order = 2;
      if (with_grad) {
        seed.value.setZero(1, count);
        seed.grad.assign(4, Eigen::MatrixXd::Zero(1, count));
        seed.hess.assign(4, Eigen::MatrixXd::Zero(1, count));
      }
      const double s_out = norm_.out_scale;
      for (Eigen::Index p = 0; p < count; ++p) {
        PointDerivatives d;
        d.value = norm_.to_kelvin(ev.value(0, p));
        d.dt = ev.grad[0](0, p) * norm_.first_derivative_factor(0);
        d.dx = ev.grad[1](0, p) * norm_.first_derivative_factor(1);
        d.dy = ev.grad[2](0, p) * norm_.first_derivative_factor(2);
        d.dz = ev.grad[3](0, p) * norm_.first_derivative_factor(3);
        d.dxx = ev.hess[1](0, p) * norm_.second_derivative_factor(1);
        d.dyy = ev.hess[2](0, p) * norm_.second_derivative_factor(2);
        d.dzz = ev.hess[3](0, p) * norm_.second_derivative_factor(3);
        const double r = pde_residual_from_derivatives(problem_.material, d, qv_[task.begin + p]);
        loss.pde += r * r / n_pde;
        if (with_grad) {
          const ResidualPartials rp = pde_residual_partials(problem_.material, d);
          const double w = 2.0 * weights.pde * r / n_pde;
          seed.value(0, p) = w * rp.dT * s_out;
          seed.grad[0](0, p) = w * rp.dTt * norm_.first_derivative_factor(0);
          seed.grad[1](0, p) = w * rp.dTx * norm_.first_derivative_factor(1);
          seed.grad[2](0, p) = w * rp.dTy * norm_.first_derivative_factor(2);
          seed.grad[3](0, p) = w * rp.dTz * norm_.first_derivative_factor(3);
          seed.hess[1](0, p) = w * rp.dTxx * norm_.second_derivative_factor(1);
          seed.hess[2](0, p) = w * rp.dTyy * norm_.second_derivative_factor(2);
          seed.hess[3](0, p) = w * rp.dTzz * norm_.second_derivative_factor(3);
        }
      }
      if (with_grad) mlp_backward(model, tape, seed, partial_grads[ti]);
      return;
    }

    if (task.group == Task::Group::Ic) {
      Eigen::MatrixXd pts(4, count);
      pts.row(0).setConstant(problem_.box.t_begin);
      pts.bottomRows(3) = colloc_.initial.middleCols(task.begin, count);
      Eigen::MatrixXd unit = norm_.to_unit_batch(pts);
      MlpTape tape;
      MlpEval ev = mlp_eval(model, unit, 0, with_grad ? &tape : nullptr);
      MlpEval seed;
      seed.order = 0;
      if (with_grad) seed.value.setZero(1, count);
      for (Eigen::Index p = 0; p < count; ++p) {
        const double mismatch =
            norm_.to_kelvin(ev.value(0, p)) - ic_targets_[task.begin + p];
        loss.ic += mismatch * mismatch / n_ic;
        if (with_grad)
          seed.value(0, p) = 2.0 * weights.ic * mismatch / n_ic * norm_.out_scale;
      }
      if (with_grad) mlp_backward(model, tape, seed, partial_grads[ti]);
      return;
    }

    // boundary face
    const Face face = static_cast<Face>(task.face);
    const FaceCondition& cond = problem_.bc[face];
    const double n_face = static_cast<double>(colloc_.boundary[task.face].cols());
    Eigen::MatrixXd pts = colloc_.boundary[task.face].middleCols(task.begin, count);
    Eigen::MatrixXd unit = norm_.to_unit_batch(pts);
    const bool needs_grad_axis = cond.kind != FaceCondition::Kind::Dirichlet;
    const int order = needs_grad_axis ? 1 : 0;
    MlpTape tape;
    MlpEval ev = mlp_eval(model, unit, order, with_grad ? &tape : nullptr);
    MlpEval seed;
    seed.order = order;
    if (with_grad) {
      seed.value.setZero(1, count);
      if (order >= 1) seed.grad.assign(4, Eigen::MatrixXd::Zero(1, count));
    }
    const int axis = face_axis(face);
    const double nsign = face_normal_sign(face);
    for (Eigen::Index p = 0; p < count; ++p) {
      const double temp = norm_.to_kelvin(ev.value(0, p));
      if (cond.kind == FaceCondition::Kind::Dirichlet) {
        const double mismatch = temp - cond.value;
        loss.bc += mismatch * mismatch / n_face;
        if (with_grad)
          seed.value(0, p) = 2.0 * weights.bc * mismatch / n_face * norm_.out_scale;
        continue;
      }
      const double grad_axis =
          ev.grad[axis + 1](0, p) * norm_.first_derivative_factor(axis + 1);
      const double normal_grad = nsign * grad_axis;
      FaceResidual fr = (cond.kind == FaceCondition::Kind::Insulated)
                            ? neumann_residual(normal_grad, 0.0)
                            : convective_residual(problem_.material, temp, normal_grad,
                                                  cond.h, cond.t_inf);
      loss.bc += fr.value * fr.value / n_face;
      if (with_grad) {
        const double w = 2.0 * weights.bc * fr.value / n_face;
        seed.value(0, p) = w * fr.dT * norm_.out_scale;
        seed.grad[axis + 1](0, p) =
            w * fr.dGn * nsign * norm_.first_derivative_factor(axis + 1);
      }
    }
    if (with_grad) mlp_backward(model, tape, seed, partial_grads[ti]);
  };

  parallel_for_blocks(tasks_.size(), 1, run_task);

  LossBreakdown total;
  for (const LossBreakdown& part : partial_loss) {
    total.ic += part.ic;
    total.bc += part.bc;
    total.pde += part.pde;
  }
  if (with_grad) {
    MlpGrads grads(model);
    for (const MlpGrads& part : partial_grads) grads.add(part);
    *grad_out = grads.pack();
  }
  if (breakdown) *breakdown = total;
  return total.weighted(weights);
}

// ---------------------------------------------------------------------------

PinnSurrogate train_pinn(const PinnProblem& problem, const TrainingConfig& config,
                         std::uint64_t seed, std::vector<TrainingRecord>* trace) {
  config.validate();
  problem.box.validate();
  problem.material.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  NormalizationSpec norm =
      problem.box.make_normalization(problem.initial_temperature, config.t_scale);

  ClusteringConfig clustering;
  clustering.fraction = config.cluster_fraction;
  clustering.radius = config.cluster_radius_factor * problem.laser.radius;
  CollocationSet colloc =
      sample_collocation(problem.box, config.collocation,
                         problem.scenario ? &*problem.scenario : nullptr, clustering,
                         derive_seed(seed, "collocation"));

  PinnObjective objective(problem, config, std::move(colloc), norm);

  Mlp model(config.layer_sizes(4, 1));
  Rng init_rng(derive_seed(seed, "init"));
  model.init_params(init_rng);

  const LossBreakdown initial = objective.losses(model);
  const LossWeights lambda = capture_weights(initial);

  Mlp work = model;
  LossBreakdown last_breakdown;
  auto lbfgs_objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    work.unpack(x);
    return objective.loss_and_gradient(work, lambda, grad, &last_breakdown);
  };

  if (trace) {
    TrainingRecord rec;
    rec.iteration = 0;
    rec.loss_ic = initial.ic;
    rec.loss_bc = initial.bc;
    rec.loss_pde = initial.pde;
    rec.total = initial.weighted(lambda);
    trace->push_back(rec);
  }
  auto on_iteration = [&](int iteration, double total) {
    if (!trace) return;
    TrainingRecord rec;
    rec.iteration = iteration;
    rec.loss_ic = last_breakdown.ic;
    rec.loss_bc = last_breakdown.bc;
    rec.loss_pde = last_breakdown.pde;
    rec.total = total;
    trace->push_back(rec);
  };

  Eigen::VectorXd start = model.pack();
  if (config.warmup_iterations > 0)
    start = gradient_descent(lbfgs_objective, std::move(start), config.warmup_iterations);
  LbfgsResult result = lbfgs_minimize(lbfgs_objective, std::move(start), config.lbfgs,
                                      on_iteration);

  PinnSurrogate out;
  out.model = model;
  out.model.unpack(result.x);
  out.norm = norm;
  out.box = problem.box;
  out.meta.seed = seed;
  out.meta.lambda = lambda;
  out.meta.initial_losses = initial;
  out.meta.iterations = result.iterations;
  out.meta.evaluations = result.evaluations;
  out.meta.status = to_string(result.status);
  out.meta.degraded = result.status == LbfgsStatus::LineSearchFailed;
  out.meta.final_losses = objective.losses(out.model);
  out.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  if (out.meta.degraded)
    std::fprintf(stderr, "warning: line search failed; returning best-so-far model (degraded)\n");
  return out;
}

void save_training_trace(const std::vector<TrainingRecord>& trace,
                         const std::filesystem::path& file) {
  std::FILE* out = std::fopen(file.string().c_str(), "w");
  if (!out) throw std::runtime_error("cannot open for write: " + file.string());
  std::fputs("iteration,loss_ic,loss_bc,loss_pde,total\n", out);
  for (const TrainingRecord& r : trace)
    std::fprintf(out, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.loss_ic, r.loss_bc,
                 r.loss_pde, r.total);
  std::fclose(out);
}

}  // namespace pbf
