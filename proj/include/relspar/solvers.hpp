#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relspar/objective.hpp"
#include "relspar/policy.hpp"

namespace relspar {

struct SolveReport {
  CoefficientVector solution;
  double objective_value = 0.0;  // M_n for maximize_m, W_n for maximize_w
  int iterations = 0;
  bool converged = false;
  double final_step_size = 0.0;
  std::vector<double> trace;  // objective per accepted step, non-decreasing
};

struct SolverOptions {
  // maximize_m runs until the gradient inf-norm reaches grad_tol (or the
  // iteration cap); converged is reported against grad_tol_accept.
  double grad_tol = 1e-9;
  double grad_tol_accept = 1e-7;
  int max_iter_m = 5000;
  // maximize_w stops when the iterate displacement inf-norm <= step_tol
  double step_tol = 1e-9;
  int max_iter_w = 10000;
  double armijo_c = 1e-4;
  double step_init = 1.0;
  double step_max = 1e6;
  double step_min = 1e-20;
  // extra random restarts for maximize_m (best objective wins)
  int multistart_extra = 1;
  std::uint64_t multistart_seed = 0x7265736f6c7665ULL;
  double multistart_spread = 0.5;
  bool keep_trace = true;
};

// First stage: gradient ascent with halving backtracking (Armijo sufficient
// increase) on M_n(beta, b_n, gamma) over all K coordinates.
SolveReport maximize_m(ObjectiveEvaluator& objective, double gamma,
                       const CoefficientVector& init,
                       const SolverOptions& options = {});

// w_k = 1 / |beta_gamma_k - b_n_k|^delta, difference floored at 1e-10.
std::vector<double> adaptive_weights(const CoefficientVector& beta_gamma,
                                     const CoefficientVector& b_n,
                                     double delta);

// Proximal map of tau * |x - b_k|: b_k + soft(xi - b_k, tau). Returns b_k
// bitwise inside the dead zone |xi - b_k| <= tau.
double prox_shifted(double xi, double b_k, double tau);

// Second stage: proximal gradient ascent on
//   W_n = M_n - lambda * sum_k weights_k |beta_k - b_n_k|.
// Warm starts come from the caller (previous lambda on the path).
SolveReport maximize_w(ObjectiveEvaluator& objective, double gamma,
                       double lambda, std::span<const double> weights,
                       const CoefficientVector& init,
                       const SolverOptions& options = {});

// A_n = {k : |beta_k - b_n_k| > tol}; the prox produces exact ties so the
// default tol = 0 is meaningful.
ActiveSet active_set(const CoefficientVector& beta,
                     const CoefficientVector& b_n, double tol = 0.0);

// Smallest lambda (to ~1% relative) whose solution ties every coordinate to
// b_n bitwise, found by bisection over solver runs started at beta_gamma.
double lambda_saturation(ObjectiveEvaluator& objective, double gamma,
                         std::span<const double> weights,
                         const CoefficientVector& beta_gamma,
                         const SolverOptions& options = {});

}  // namespace relspar
