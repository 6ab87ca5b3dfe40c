#include "relspar/check.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "relspar/errors.hpp"
#include "relspar/fd.hpp"
#include "relspar/objective.hpp"
#include "relspar/rng.hpp"
#include "relspar/simulate.hpp"
#include "relspar/solvers.hpp"

namespace relspar {

namespace {

SimConfig builtin_config() {
  SimConfig cfg;
  cfg.n = 150;
  cfg.horizon = 3;
  cfg.state_dim = 2;
  cfg.seed = 424242;
  return cfg;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<CheckLine> run_checks(const CheckOptions& options) {
  std::vector<CheckLine> lines;
  const TrajectoryDataset data = simulate(builtin_config());
  const BehavioralFit fit = fit_behavioral(data);
  ObjectiveEvaluator objective(data, fit.b_n);
  const std::size_t k_dim = data.state_dim();
  const ActiveSet full = ActiveSet::full(k_dim);
  Rng rng(options.seed);

  // 1. analytic J/H/X vs central finite differences of M_n
  {
    double worst = 0.0;
    for (int p = 0; p < options.fd_points; ++p) {
      std::vector<double> beta(k_dim), b(k_dim);
      for (std::size_t k = 0; k < k_dim; ++k) {
        beta[k] = fit.b_n.values[k] + rng.uniform(-1.0, 1.0);
        b[k] = fit.b_n.values[k] + rng.uniform(-0.2, 0.2);
      }
      const double gamma = std::pow(10.0, rng.uniform(-1.0, 1.0));
      auto m_of = [&](const std::vector<double>& bt,
                      const std::vector<double>& bb) {
        return objective_m(data, {bt, CoefficientRole::suggested},
                           {bb, CoefficientRole::behavioral}, gamma, full);
      };
      DerivativeBundle bundle =
          derivatives(data, {beta, CoefficientRole::suggested},
                      {b, CoefficientRole::behavioral}, gamma, full);
      if (options.perturb_gradient) bundle.gradient[0] += 1e-3;
      const Eigen::VectorXd j_fd = fd::gradient_beta(m_of, beta, b);
      const Eigen::MatrixXd h_fd = fd::hessian_beta(m_of, beta, b);
      const Eigen::MatrixXd x_fd = fd::cross_beta_b(m_of, beta, b);
      worst = std::max(worst, fd::scaled_max_err(bundle.gradient, j_fd));
      worst = std::max(worst, fd::scaled_max_err(bundle.hessian, h_fd));
      worst = std::max(worst, fd::scaled_max_err(bundle.cross, x_fd));
    }
    lines.push_back({"derivatives_vs_finite_differences", worst <= 1e-5,
                     "max scaled error " + fmt(worst) + " (tol 1e-5)"});
  }

  // 2. prox vs dense grid argmin of 0.5 (u-xi)^2 + tau |u-b|
  {
    double worst = 0.0;
    bool dead_zone_exact = true;
    for (int p = 0; p < options.prox_triples; ++p) {
      const double xi = rng.uniform(-3.0, 3.0);
      const double b = rng.uniform(-3.0, 3.0);
      const double tau = rng.uniform(0.0, 2.0);
      const double got = prox_shifted(xi, b, tau);
      if (std::fabs(xi - b) <= tau && got != b) dead_zone_exact = false;
      const double lo = std::min(xi, b) - 1.0, hi = std::max(xi, b) + 1.0;
      double best_u = lo, best_f = std::numeric_limits<double>::infinity();
      for (double u = lo; u <= hi; u += 1e-4) {
        const double f = 0.5 * (u - xi) * (u - xi) + tau * std::fabs(u - b);
        if (f < best_f) {
          best_f = f;
          best_u = u;
        }
      }
      worst = std::max(worst, std::fabs(got - best_u));
    }
    lines.push_back({"prox_vs_grid_search", worst <= 1e-4 && dead_zone_exact,
                     "max |prox - argmin| " + fmt(worst) +
                         (dead_zone_exact ? ", dead zone bitwise"
                                          : ", DEAD ZONE NOT EXACT")});
  }

  // 3. path endpoints: lambda = 0 reduction and saturation tie
  {
    const double gamma = 1.0;
    const SolveReport stage1 = maximize_m(objective, gamma, fit.b_n);
    const std::vector<double> w =
        adaptive_weights(stage1.solution, fit.b_n, 1.0);
    const SolveReport at0 =
        maximize_w(objective, gamma, 0.0, w, stage1.solution);
    double dev0 = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k)
      dev0 = std::max(dev0, std::fabs(at0.solution.values[k] -
                                      stage1.solution.values[k]));
    const double sat =
        lambda_saturation(objective, gamma, w, stage1.solution);
    const SolveReport at_sat =
        maximize_w(objective, gamma, sat, w, stage1.solution);
    bool tied = true;
    for (std::size_t k = 0; k < k_dim; ++k)
      if (at_sat.solution.values[k] != fit.b_n.values[k]) tied = false;
    lines.push_back({"path_endpoints", dev0 <= 1e-6 && tied,
                     "lambda=0 deviation " + fmt(dev0) +
                         (tied ? ", saturation tie bitwise"
                               : ", SATURATION NOT TIED")});
  }

  // 4. KL identities
  {
    const double at_b = objective.kl(fit.b_n, full);
    const double kl_pair = 0.5 * std::log(0.5 / 0.75) +
                           0.5 * std::log(0.5 / 0.25);
    const double want = 0.5 * std::log(4.0 / 3.0);
    lines.push_back({"kl_identities",
                     at_b <= 1e-14 && std::fabs(kl_pair - want) <= 1e-12,
                     "KL(b_n) = " + fmt(at_b)});
  }

  return lines;
}

}  // namespace relspar
