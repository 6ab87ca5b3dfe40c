#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relspar/dataset.hpp"
#include "relspar/policy.hpp"

namespace relspar {

enum class KlDirection {
  behavioral_to_suggested,  // KL(pi_{b_n} || pi_beta), the default
  suggested_to_behavioral,  // reverse direction, sensitivity switch
};

struct ObjectiveConfig {
  KlDirection kl_direction = KlDirection::behavioral_to_suggested;
  double positivity_floor = 1e-8;  // minimum behavioral prob of observed actions
  double weight_cap = 0.0;         // 0 = off; exploratory only, blocks gradients
  std::string is_variant = "trajectory";  // "per_decision" is rejected

  void validate() const;
};

// J_n, H_n, X_n and the per-trajectory gradient rows of M_n at a stated
// evaluation point. X_n rows index the beta coordinate, columns the b
// coordinate. Coordinates outside `eval_active` enter only through the
// hybrid policy's behavioral slots, so their beta-derivatives are zero.
struct DerivativeBundle {
  CoefficientVector eval_beta;
  CoefficientVector eval_b;
  double gamma = 0.0;
  Eigen::VectorXd gradient;     // J_n, K
  Eigen::MatrixXd hessian;      // H_n, K x K
  Eigen::MatrixXd cross;        // X_n = d^2 M_n / dbeta db, K x K
  Eigen::MatrixXd z_per_traj;   // n x K, row i = grad_beta m_i
};

// Evaluates V_n, KL_n, M_n and their derivatives for one (dataset, b_n)
// pair. Behavioral quantities are precomputed once; per-call work runs on
// the kernel backend. Instances hold scratch buffers: not thread-safe,
// create one per thread.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const TrajectoryDataset& data,
                     const CoefficientVector& b_n,
                     const ObjectiveConfig& config = {});

  struct Eval {
    double value = 0.0;
    double kl = 0.0;
    double objective = 0.0;
  };

  double value(const CoefficientVector& beta, const ActiveSet& active);
  double kl(const CoefficientVector& beta, const ActiveSet& active);
  double objective(const CoefficientVector& beta, double gamma,
                   const ActiveSet& active);
  Eval eval(const CoefficientVector& beta, double gamma,
            const ActiveSet& active);

  // Objective and its beta-gradient (masked by the active set).
  Eval eval_with_gradient(const CoefficientVector& beta, double gamma,
                          const ActiveSet& active, Eigen::VectorXd& grad);

  DerivativeBundle derivatives(const CoefficientVector& beta, double gamma,
                               const ActiveSet& active);

  // rho_i * G_i per trajectory (importance-weighted returns).
  std::vector<double> weighted_returns(const CoefficientVector& beta,
                                       const ActiveSet& active);

  // dV_n/db, including both the weight denominators and the hybrid policy's
  // behavioral slots.
  Eigen::VectorXd value_gradient_b(const CoefficientVector& beta,
                                   const ActiveSet& active);

  const CoefficientVector& behavioral() const { return b_n_; }
  const ObjectiveConfig& config() const { return config_; }
  std::size_t n() const { return n_; }
  std::size_t state_dim() const { return k_; }

 private:
  void compute_logits(const CoefficientVector& beta, const ActiveSet& active);
  void compute_rho();  // fills rho_ from ell_/sp_; applies the cap if set
  double kl_from_buffers();
  void require_positivity() const;
  void require_no_cap(const char* op) const;

  std::size_t n_, steps_, k_, points_;
  ObjectiveConfig config_;
  CoefficientVector b_n_;

  std::vector<std::vector<double>> cols_;  // K state columns, length M
  std::vector<const double*> col_ptrs_;
  std::vector<double> act_;       // actions as doubles
  std::vector<double> returns_;   // G_i
  std::vector<double> lb_, p_, spb_;   // behavioral logit, prob, softplus
  std::vector<double> logden_;    // per trajectory: log prod pi_b(a|s)
  Eigen::MatrixXd sb_;            // n x K behavioral score rows
  double klconst_sum_ = 0.0;      // sum_m p*lb - spb
  double spb_sum_ = 0.0;
  bool positivity_ok_ = true;
  std::size_t pos_i_ = 0, pos_t_ = 0;

  // scratch
  std::vector<double> ell_, sp_, q_, lognum_, resid_, tmp_, wexp_;
  std::vector<double> acc_, rho_;
};

// Convenience wrappers matching the operation contracts; each constructs a
// throwaway evaluator. Prefer ObjectiveEvaluator in loops.
double value_is(const TrajectoryDataset& data, const CoefficientVector& beta,
                const CoefficientVector& b_n, const ActiveSet& active,
                const ObjectiveConfig& config = {});
double kl_est(const TrajectoryDataset& data, const CoefficientVector& beta,
              const CoefficientVector& b_n, const ActiveSet& active,
              const ObjectiveConfig& config = {});
double objective_m(const TrajectoryDataset& data,
                   const CoefficientVector& beta,
                   const CoefficientVector& b_n, double gamma,
                   const ActiveSet& active, const ObjectiveConfig& config = {});
DerivativeBundle derivatives(const TrajectoryDataset& data,
                             const CoefficientVector& beta,
                             const CoefficientVector& b_n, double gamma,
                             const ActiveSet& active,
                             const ObjectiveConfig& config = {});

}  // namespace relspar
