#include "pbf/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>

namespace pbf {

void LbfgsConfig::validate() const {
  if (history_size < 1) throw std::invalid_argument("lbfgs.history_size must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("lbfgs.max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0))
    throw std::invalid_argument("lbfgs.gradient_tolerance must be > 0");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    throw std::invalid_argument("lbfgs wolfe constants need 0 < c1 < c2 < 1");
}

std::string to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::IterationLimit: return "iteration_limit";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Probe {
  double alpha, f, dphi;  // step, loss, directional derivative
};

// cubic interpolation minimizer for zoom; falls back to bisection
double interpolate(const Probe& lo, const Probe& hi) {
  const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
  const double sq = d1 * d1 - lo.dphi * hi.dphi;
  if (sq >= 0.0) {
    const double d2 = std::copysign(std::sqrt(sq), hi.alpha - lo.alpha);
    double cand = hi.alpha - (hi.alpha - lo.alpha) * (hi.dphi + d2 - d1) /
                                (hi.dphi - lo.dphi + 2.0 * d2);
    const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
    const double margin = 0.1 * (b - a);
    if (std::isfinite(cand) && cand > a + margin && cand < b - margin) return cand;
  }
  return 0.5 * (lo.alpha + hi.alpha);
}

}  // namespace

LbfgsResult lbfgs_minimize(const LbfgsObjective& objective, Eigen::VectorXd start,
                           const LbfgsConfig& config,
                           const LbfgsIterationCallback& on_iteration) {
  config.validate();
  const Eigen::Index n = start.size();

  LbfgsResult result;
  Eigen::VectorXd x = std::move(start);
  Eigen::VectorXd grad(n);
  double f = objective(x, grad);
  ++result.evaluations;
  result.trace.push_back(f);
  result.x = x;
  result.loss = f;
  result.gradient = grad;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  Eigen::VectorXd dir(n), x_trial(n), grad_trial(n);

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (grad.norm() < config.gradient_tolerance) {
      result.status = LbfgsStatus::Converged;
      break;
    }

    // two-loop recursion
    dir = -grad;
    const std::size_t m = s_hist.size();
    std::vector<double> a_coef(m);
    for (std::size_t i = m; i-- > 0;) {
      a_coef[i] = rho_hist[i] * s_hist[i].dot(dir);
      dir -= a_coef[i] * y_hist[i];
    }
    if (m > 0) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      dir *= gamma;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(dir);
      dir += (a_coef[i] - b) * s_hist[i];
    }

    double dphi0 = grad.dot(dir);
    if (!(dphi0 < 0.0)) {  // not a descent direction; restart from steepest
      dir = -grad;
      dphi0 = grad.dot(dir);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // strong Wolfe line search (bracketing phase, then zoom)
    const double c1 = config.wolfe_c1, c2 = config.wolfe_c2;
    auto eval_at = [&](double alpha) -> Probe {
      x_trial = x + alpha * dir;
      const double f_t = objective(x_trial, grad_trial);
      ++result.evaluations;
      return {alpha, f_t, grad_trial.dot(dir)};
    };

    Probe lo{0.0, f, dphi0};
    Probe prev = lo;
    double alpha = 1.0;
    bool accepted = false;
    bool grad_fresh = false;  // grad_trial matches best_probe
    Probe best_probe = prev;
    std::optional<std::pair<Probe, Probe>> bracket;

    for (int ls = 0; ls < config.max_line_search_steps; ++ls) {
      Probe cur = eval_at(alpha);
      if (!std::isfinite(cur.f) || cur.f > f + c1 * alpha * dphi0 ||
          (ls > 0 && cur.f >= prev.f)) {
        bracket = {prev, cur};
        break;
      }
      if (std::abs(cur.dphi) <= -c2 * dphi0) {
        accepted = true;
        grad_fresh = true;
        best_probe = cur;
        break;
      }
      if (cur.dphi >= 0.0) {
        bracket = {cur, prev};
        break;
      }
      prev = cur;
      alpha *= 2.0;
    }

    if (!accepted && bracket) {
      Probe b_lo = bracket->first, b_hi = bracket->second;
      for (int zi = 0; zi < config.max_line_search_steps; ++zi) {
        double a_j = interpolate(b_lo, b_hi);
        Probe cur = eval_at(a_j);
        if (!std::isfinite(cur.f) || cur.f > f + c1 * a_j * dphi0 || cur.f >= b_lo.f) {
          b_hi = cur;
        } else {
          if (std::abs(cur.dphi) <= -c2 * dphi0) {
            accepted = true;
            grad_fresh = true;
            best_probe = cur;
            break;
          }
          if (cur.dphi * (b_hi.alpha - b_lo.alpha) >= 0.0) b_hi = b_lo;
          b_lo = cur;
        }
        if (std::abs(b_hi.alpha - b_lo.alpha) < 1e-16 * std::max(1.0, std::abs(b_lo.alpha))) {
          // interval collapsed; accept the low point if it at least decreases
          if (b_lo.alpha > 0.0 && b_lo.f < f) {
            accepted = true;
            best_probe = b_lo;
          }
          break;
        }
      }
      // zoom exhausted: fall back to the best sufficient-decrease point
      if (!accepted && b_lo.alpha > 0.0 && b_lo.f < f) {
        accepted = true;
        best_probe = b_lo;
      }
    }

    if (!accepted) {
      result.status = LbfgsStatus::LineSearchFailed;
      break;
    }

    x_trial = x + best_probe.alpha * dir;
    if (!grad_fresh) {
      best_probe.f = objective(x_trial, grad_trial);
      ++result.evaluations;
    }

    Eigen::VectorXd s_vec = x_trial - x;
    Eigen::VectorXd y_vec = grad_trial - grad;
    const double sy = s_vec.dot(y_vec);
    if (sy > 1e-12 * s_vec.norm() * y_vec.norm()) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.history_size) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    x = x_trial;
    f = best_probe.f;
    grad = grad_trial;
    result.iterations = iter + 1;
    result.trace.push_back(f);
    if (on_iteration) on_iteration(iter + 1, f);
    if (f < result.loss) {
      result.loss = f;
      result.x = x;
      result.gradient = grad;
    }
  }

  if (result.status == LbfgsStatus::IterationLimit && grad.norm() < config.gradient_tolerance)
    result.status = LbfgsStatus::Converged;
  return result;
}

Eigen::VectorXd gradient_descent(const LbfgsObjective& objective, Eigen::VectorXd start,
                                 int iterations, double initial_step) {
  Eigen::VectorXd x = std::move(start);
  Eigen::VectorXd grad(x.size()), trial_grad(x.size());
  double step = initial_step;
  double f = objective(x, grad);
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd trial = x - step * grad;
    double f_t = objective(trial, trial_grad);
    int backtracks = 0;
    while ((!std::isfinite(f_t) || f_t > f) && backtracks < 30) {
      step *= 0.5;
      trial = x - step * grad;
      f_t = objective(trial, trial_grad);
      ++backtracks;
    }
    if (f_t > f) break;
    x = trial;
    f = f_t;
    grad = trial_grad;
    if (backtracks == 0) step *= 1.5;
  }
  return x;
}

}  // namespace pbf
