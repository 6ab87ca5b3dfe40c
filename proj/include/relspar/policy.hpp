#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "relspar/dataset.hpp"

namespace relspar {

enum class CoefficientRole { behavioral, suggested };

// A K-vector of logistic policy coefficients with its role tag.
struct CoefficientVector {
  std::vector<double> values;
  CoefficientRole role = CoefficientRole::suggested;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  void validate(std::size_t expected_dim) const;  // finite + length check
};

// Indices (0-based) where a fitted coefficient differs from its behavioral
// counterpart by more than `tolerance`. External surfaces print 1-based.
struct ActiveSet {
  std::vector<std::size_t> indices;  // strictly increasing
  double tolerance = 0.0;

  static ActiveSet full(std::size_t k_dim);
  static ActiveSet none() { return {}; }

  bool contains(std::size_t k) const;
  bool is_full(std::size_t k_dim) const { return indices.size() == k_dim; }
  bool empty() const { return indices.empty(); }
  std::size_t size() const { return indices.size(); }
  std::vector<std::size_t> complement(std::size_t k_dim) const;
  // 1.0 for active coordinates, 0.0 elsewhere
  std::vector<double> mask(std::size_t k_dim) const;
};

double expit(double x);

// P(action | state) under expit(coeffs' state); always in (0, 1).
double policy_prob(const CoefficientVector& coeffs,
                   std::span<const double> state, int action);

// Coefficients of the hybrid policy: beta on active slots, b elsewhere.
std::vector<double> hybrid_coefficients(const CoefficientVector& beta,
                                        const CoefficientVector& b,
                                        const ActiveSet& active);

// P(action | state) under expit(beta'(s . 1_A) + b'(s . (1-1_A))).
double hybrid_policy_prob(const CoefficientVector& beta,
                          const CoefficientVector& b, const ActiveSet& active,
                          std::span<const double> state, int action);

struct BehavioralFit {
  CoefficientVector b_n;             // role = behavioral
  Eigen::MatrixXd fisher_per_traj;   // I1 = (1/n) sum_i sum_t w ss', K x K
  Eigen::MatrixXd scores_per_traj;   // n x K, row i = sum_t (a - p) s
  bool converged = false;
  int iterations = 0;
};

struct NewtonOptions {
  int max_iter = 100;
  double score_tol = 1e-9;  // on the per-trajectory mean score, inf-norm
  double coef_cap = 30.0;   // separation guard on ||b||_inf
};

// Pooled logistic MLE over all (i, t) pairs via damped Newton.
BehavioralFit fit_behavioral(const TrajectoryDataset& data,
                             const NewtonOptions& options = {});

// q_i = I1^{-1} s_i(b_n): rows estimate the summands of sqrt(n)(b_n - b_0).
Eigen::MatrixXd behavioral_influence(const BehavioralFit& fit);

}  // namespace relspar
