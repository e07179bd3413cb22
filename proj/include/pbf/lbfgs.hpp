#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pbf {

struct LbfgsConfig {
  int history_size = 50;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-9;
  double wolfe_c1 = 1e-4;  // sufficient decrease
  double wolfe_c2 = 0.9;   // curvature
  int max_line_search_steps = 40;

  void validate() const;
};

enum class LbfgsStatus { Converged, IterationLimit, LineSearchFailed };

std::string to_string(LbfgsStatus status);

struct LbfgsResult {
  Eigen::VectorXd x;             // best parameters seen
  double loss = 0.0;             // loss at x
  Eigen::VectorXd gradient;      // gradient at x
  LbfgsStatus status = LbfgsStatus::IterationLimit;
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> trace;     // accepted loss per iteration, trace[0] = initial
};

// objective(x, grad_out) -> loss; must be deterministic for a fixed x.
using LbfgsObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Fired once per accepted iterate, immediately after the objective was
// evaluated at it (so callers can snapshot per-term loss breakdowns).
using LbfgsIterationCallback = std::function<void(int iteration, double loss)>;

// Two-loop recursion with strong-Wolfe line search (bracket + zoom). On line
// search failure returns the best point so far with a status flag rather
// than throwing.
LbfgsResult lbfgs_minimize(const LbfgsObjective& objective, Eigen::VectorXd start,
                           const LbfgsConfig& config,
                           const LbfgsIterationCallback& on_iteration = {});

// Plain gradient descent with Armijo backtracking; optional warmup before
// L-BFGS on hard losses.
Eigen::VectorXd gradient_descent(const LbfgsObjective& objective, Eigen::VectorXd start,
                                 int iterations, double initial_step = 1e-3);

}  // namespace pbf
