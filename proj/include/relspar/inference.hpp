#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "relspar/objective.hpp"
#include "relspar/policy.hpp"

namespace relspar {

struct InferenceOptions {
  bool center_r = false;      // center the middle moment (sensitivity only)
  double cond_limit = 1e12;   // Hessian-block condition number guard
};

// Selection-aware coefficient variance. active_block is the |A|x|A| sandwich
// for the selected coordinates; behavioral_diag carries asymptotic variances
// for the complement (same order as active.complement(K)). per_coordinate_se
// is the assembled K-vector of finite-sample standard errors
// sqrt(asymptotic variance / n); complement slots are NaN until merged via
// merge_behavioral_variance.
struct CoefficientVariance {
  Eigen::MatrixXd active_block;
  std::vector<double> behavioral_diag;
  ActiveSet active;
  std::size_t n = 0;
  std::vector<double> per_coordinate_se;
};

// Per-trajectory r rows from the Theorem-2 display with the behavioral
// components of u replaced by their counterparts in v, and v_{n,i} = q_i:
//   r_i = z_{i,A} + (H_{A^C A})' q_{i,A^C} + H_{A A^C} q_{i,A^C} + (X q_i)_A
// Returns n x |A|. Throws EmptyActiveSetError when A is empty (callers route
// those coordinates to the behavioral variance instead).
Eigen::MatrixXd assemble_r(const DerivativeBundle& bundle,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& z,
                           const ActiveSet& active);

// sigma^2_{n,A} = (H_AA)^{-1} [ (1/n) sum_i r_i r_i' ] ((H_AA)^{-1})'
// with the uncentered second moment unless options.center_r.
CoefficientVariance coef_variance_adaptive(const Eigen::MatrixXd& r_matrix,
                                           const DerivativeBundle& bundle,
                                           const ActiveSet& active,
                                           const InferenceOptions& options = {});

// Asymptotic variances (I1^{-1})_kk for coordinates tied to b_n.
std::vector<double> coef_variance_behavioral(
    const BehavioralFit& fit, const std::vector<std::size_t>& complement);

// Fills the complement entries of `variance` from the behavioral fit.
void merge_behavioral_variance(CoefficientVariance& variance,
                               const BehavioralFit& fit);

// Full-index-set comparison sandwich H^{-1} [ (1/n) sum (z_i + X q_i)(...)' ]
// (H^{-1})'; identical to Eq. (1) with A = {1..K}.
Eigen::MatrixXd coef_variance_baseline(const DerivativeBundle& bundle,
                                       const Eigen::MatrixXd& q,
                                       const Eigen::MatrixXd& z,
                                       const InferenceOptions& options = {});

// Influence-function variance of V_n:
//   (1/n^2) sum_i ((rho_i G_i - V_n) + g_b' q_i)^2,  g_b = dV_n/db.
double value_variance(ObjectiveEvaluator& objective,
                      const CoefficientVector& beta, const ActiveSet& active,
                      const Eigen::MatrixXd& q);
double value_variance(const TrajectoryDataset& data,
                      const CoefficientVector& beta,
                      const CoefficientVector& b_n, const ActiveSet& active,
                      const Eigen::MatrixXd& q,
                      const ObjectiveConfig& config = {});

}  // namespace relspar
