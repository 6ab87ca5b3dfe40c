#include "relspar/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relspar/errors.hpp"
#include "relspar/rng.hpp"

namespace relspar {

namespace {

CoefficientVector to_coef(const Eigen::VectorXd& v) {
  return {{v.data(), v.data() + v.size()}, CoefficientRole::suggested};
}

// Single gradient-ascent run from one start point.
SolveReport ascend_m(ObjectiveEvaluator& objective, double gamma,
                     const Eigen::VectorXd& start,
                     const SolverOptions& opt) {
  const ActiveSet full = ActiveSet::full(objective.state_dim());
  Eigen::VectorXd x = start;
  Eigen::VectorXd grad;
  CoefficientVector xc = to_coef(x);
  auto ev = objective.eval_with_gradient(xc, gamma, full, grad);
  if (!std::isfinite(ev.objective))
    throw DivergenceError("objective is non-finite at the initial point",
                          xc.values);

  SolveReport report;
  if (opt.keep_trace) report.trace.push_back(ev.objective);
  double eta = opt.step_init;
  int iter = 0;
  for (; iter < opt.max_iter_m; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= opt.grad_tol) break;
    eta = std::min(eta * 2.0, opt.step_max);
    const double g2 = grad.squaredNorm();
    bool accepted = false;
    Eigen::VectorXd x_try;
    double f_try = 0.0;
    while (eta >= opt.step_min) {
      x_try = x + eta * grad;
      f_try = objective.objective(to_coef(x_try), gamma, full);
      if (std::isfinite(f_try) &&
          f_try >= ev.objective + opt.armijo_c * eta * g2) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // step size exhausted: numerically stationary
    x = x_try;
    xc = to_coef(x);
    ev = objective.eval_with_gradient(xc, gamma, full, grad);
    if (opt.keep_trace) report.trace.push_back(ev.objective);
  }

  report.solution = to_coef(x);
  report.objective_value = ev.objective;
  report.iterations = iter;
  report.converged = grad.lpNorm<Eigen::Infinity>() <= opt.grad_tol_accept;
  report.final_step_size = eta;
  return report;
}

}  // namespace

SolveReport maximize_m(ObjectiveEvaluator& objective, double gamma,
                       const CoefficientVector& init,
                       const SolverOptions& options) {
  const std::size_t k_dim = objective.state_dim();
  init.validate(k_dim);
  const Eigen::Map<const Eigen::VectorXd> x0(init.values.data(), k_dim);

  SolveReport best = ascend_m(objective, gamma, x0, options);
  Rng rng(options.multistart_seed);
  for (int s = 0; s < options.multistart_extra; ++s) {
    Eigen::VectorXd start(k_dim);
    for (std::size_t k = 0; k < k_dim; ++k)
      start[k] = x0[k] + rng.uniform(-options.multistart_spread,
                                     options.multistart_spread);
    SolveReport alt = ascend_m(objective, gamma, start, options);
    if (alt.objective_value > best.objective_value) best = std::move(alt);
  }
  return best;
}

std::vector<double> adaptive_weights(const CoefficientVector& beta_gamma,
                                     const CoefficientVector& b_n,
                                     double delta) {
  if (!(delta > 0.0)) throw ParameterError("delta must be > 0");
  if (beta_gamma.values.size() != b_n.values.size())
    throw ShapeError("beta_gamma and b_n must have equal length");
  std::vector<double> w(b_n.values.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double diff =
        std::max(std::fabs(beta_gamma.values[k] - b_n.values[k]), 1e-10);
    w[k] = 1.0 / std::pow(diff, delta);
  }
  return w;
}

double prox_shifted(double xi, double b_k, double tau) {
  if (tau < 0.0) throw ParameterError("prox threshold must be >= 0");
  if (tau == 0.0) return xi;
  const double d = xi - b_k;
  if (std::fabs(d) <= tau) return b_k;
  return d > 0.0 ? b_k + (d - tau) : b_k + (d + tau);
}

SolveReport maximize_w(ObjectiveEvaluator& objective, double gamma,
                       double lambda, std::span<const double> weights,
                       const CoefficientVector& init,
                       const SolverOptions& options) {
  const std::size_t k_dim = objective.state_dim();
  init.validate(k_dim);
  if (lambda < 0.0) throw ParameterError("lambda must be >= 0");
  if (weights.size() != k_dim)
    throw ShapeError("weights must have one entry per coordinate");
  const ActiveSet full = ActiveSet::full(k_dim);
  const std::vector<double>& b = objective.behavioral().values;

  auto penalty = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k)
      s += weights[k] * std::fabs(v[k] - b[k]);
    return lambda * s;
  };

  Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXd>(init.values.data(), k_dim);
  Eigen::VectorXd grad;
  auto ev = objective.eval_with_gradient(to_coef(x), gamma, full, grad);
  if (!std::isfinite(ev.objective))
    throw DivergenceError("objective is non-finite at the initial point",
                          init.values);
  double w_cur = ev.objective - penalty(x);

  SolveReport report;
  if (options.keep_trace) report.trace.push_back(w_cur);
  double eta = options.step_init;
  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iter_w; ++iter) {
    eta = std::min(eta * 2.0, options.step_max);
    bool accepted = false;
    Eigen::VectorXd x_try(k_dim);
    double f_try = 0.0, w_try = 0.0;
    while (eta >= options.step_min) {
      for (std::size_t k = 0; k < k_dim; ++k)
        x_try[k] =
            prox_shifted(x[k] + eta * grad[k], b[k], eta * lambda * weights[k]);
      f_try = objective.objective(to_coef(x_try), gamma, full);
      if (std::isfinite(f_try)) {
        const Eigen::VectorXd dx = x_try - x;
        // quadratic-model sufficient increase for the smooth part; implies
        // ascent on W for the prox step
        if (f_try >=
            ev.objective + grad.dot(dx) - dx.squaredNorm() / (2.0 * eta)) {
          w_try = f_try - penalty(x_try);
          if (w_try >= w_cur) {
            accepted = true;
            break;
          }
        }
      }
      eta *= 0.5;
    }
    if (!accepted) {
      converged = true;  // no admissible move: numerically a fixed point
      break;
    }
    const double disp = (x_try - x).lpNorm<Eigen::Infinity>();
    x = x_try;
    ev = objective.eval_with_gradient(to_coef(x), gamma, full, grad);
    w_cur = ev.objective - penalty(x);
    if (options.keep_trace) report.trace.push_back(w_cur);
    if (disp <= options.step_tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  report.solution = to_coef(x);
  report.objective_value = w_cur;
  report.iterations = iter;
  report.converged = converged;
  report.final_step_size = eta;
  return report;
}

ActiveSet active_set(const CoefficientVector& beta,
                     const CoefficientVector& b_n, double tol) {
  if (beta.values.size() != b_n.values.size())
    throw ShapeError("beta and b_n must have equal length");
  if (tol < 0.0) throw ParameterError("active-set tolerance must be >= 0");
  ActiveSet a;
  a.tolerance = tol;
  for (std::size_t k = 0; k < beta.values.size(); ++k)
    if (std::fabs(beta.values[k] - b_n.values[k]) > tol) a.indices.push_back(k);
  return a;
}

double lambda_saturation(ObjectiveEvaluator& objective, double gamma,
                         std::span<const double> weights,
                         const CoefficientVector& beta_gamma,
                         const SolverOptions& options) {
  const std::size_t k_dim = objective.state_dim();
  const std::vector<double>& b = objective.behavioral().values;

  auto tied = [&](double lam) {
    const SolveReport r =
        maximize_w(objective, gamma, lam, weights, beta_gamma, options);
    for (std::size_t k = 0; k < k_dim; ++k)
      if (r.solution.values[k] != b[k]) return false;
    return true;
  };

  // fixed-point bound: b_n survives the prox iff |J_k(b_n)| <= lam * w_k
  Eigen::VectorXd grad;
  objective.eval_with_gradient(objective.behavioral(), gamma,
                               ActiveSet::full(k_dim), grad);
  double lam0 = 0.0;
  for (std::size_t k = 0; k < k_dim; ++k)
    lam0 = std::max(lam0, std::fabs(grad[k]) / weights[k]);
  if (lam0 == 0.0) return 0.0;

  double hi = lam0 * 1.0001;
  double lo = 0.0;
  int doublings = 0;
  while (!tied(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60)
      throw ConvergenceError("lambda saturation search did not bracket a tie",
                             {hi});
  }
  while (hi - lo > 0.01 * hi) {
    const double mid = 0.5 * (hi + lo);
    if (tied(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace relspar
