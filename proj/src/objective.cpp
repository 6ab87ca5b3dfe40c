#include "relspar/objective.hpp"

#include <algorithm>
#include <cmath>

#include "relspar/errors.hpp"
#include "relspar/kernels.hpp"

namespace relspar {

void ObjectiveConfig::validate() const {
  if (!(positivity_floor > 0.0) || positivity_floor >= 0.5)
    throw ConfigError("positivity_floor must be in (0, 0.5)");
  if (weight_cap < 0.0) throw ConfigError("weight_cap must be >= 0");
  if (is_variant == "per_decision")
    throw ConfigError(
        "per-decision importance sampling is not supported; use 'trajectory'");
  if (is_variant != "trajectory")
    throw ConfigError("unknown importance-sampling variant: " + is_variant);
}

ObjectiveEvaluator::ObjectiveEvaluator(const TrajectoryDataset& data,
                                       const CoefficientVector& b_n,
                                       const ObjectiveConfig& config)
    : n_(data.n()),
      steps_(data.t_plus_1()),
      k_(data.state_dim()),
      points_(data.n_points()),
      config_(config),
      b_n_(b_n) {
  config_.validate();
  b_n_.validate(k_);
  const auto& ops = kernels::active();

  cols_.assign(k_, std::vector<double>(points_));
  const std::span<const double> flat = data.states_flat();
  for (std::size_t m = 0; m < points_; ++m)
    for (std::size_t k = 0; k < k_; ++k) cols_[k][m] = flat[m * k_ + k];
  col_ptrs_.resize(k_);
  for (std::size_t k = 0; k < k_; ++k) col_ptrs_[k] = cols_[k].data();

  act_.resize(points_);
  for (std::size_t m = 0; m < points_; ++m)
    act_[m] = static_cast<double>(data.actions_flat()[m]);

  returns_.assign(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t t = 0; t < steps_; ++t) returns_[i] += data.reward(i, t);

  lb_.resize(points_);
  p_.resize(points_);
  spb_.resize(points_);
  ops.linear_combine(col_ptrs_.data(), b_n_.values.data(), k_, lb_.data(),
                     points_);
  ops.expit(lb_.data(), p_.data(), points_);
  ops.softplus(lb_.data(), spb_.data(), points_);

  // log pi_b(a|s) per point; also the positivity check
  std::vector<double> logden_pt(points_);
  ops.mul_sub(act_.data(), lb_.data(), spb_.data(), logden_pt.data(), points_);
  const double log_floor = std::log(config_.positivity_floor);
  for (std::size_t m = 0; m < points_; ++m) {
    if (logden_pt[m] < log_floor) {
      positivity_ok_ = false;
      pos_i_ = m / steps_;
      pos_t_ = m % steps_;
      break;
    }
  }
  logden_.resize(n_);
  ops.segment_sum(logden_pt.data(), n_, steps_, logden_.data());

  klconst_sum_ = ops.dot(p_.data(), lb_.data(), points_) -
                 ops.sum(spb_.data(), points_);
  spb_sum_ = ops.sum(spb_.data(), points_);

  // behavioral per-trajectory scores sum_t (a - p) s
  sb_.resize(n_, k_);
  std::vector<double> rb(points_), prod(points_), seg(n_);
  ops.sub(act_.data(), p_.data(), rb.data(), points_);
  for (std::size_t k = 0; k < k_; ++k) {
    ops.mul(rb.data(), cols_[k].data(), prod.data(), points_);
    ops.segment_sum(prod.data(), n_, steps_, seg.data());
    for (std::size_t i = 0; i < n_; ++i) sb_(i, k) = seg[i];
  }

  ell_.resize(points_);
  sp_.resize(points_);
  q_.resize(points_);
  lognum_.resize(points_);
  resid_.resize(points_);
  tmp_.resize(points_);
  wexp_.resize(points_);
  acc_.resize(n_);
  rho_.resize(n_);
}

void ObjectiveEvaluator::require_positivity() const {
  if (!positivity_ok_)
    throw PositivityError(
        "behavioral probability of the observed action is below " +
        std::to_string(config_.positivity_floor) + " at (i=" +
        std::to_string(pos_i_) + ", t=" + std::to_string(pos_t_) + ")");
}

void ObjectiveEvaluator::require_no_cap(const char* op) const {
  if (config_.weight_cap > 0.0)
    throw ConfigError(std::string(op) +
                      " requires the importance-weight cap to be off");
}

void ObjectiveEvaluator::compute_logits(const CoefficientVector& beta,
                                        const ActiveSet& active) {
  if (beta.values.size() != k_)
    throw ShapeError("beta has length " + std::to_string(beta.values.size()) +
                     ", expected " + std::to_string(k_));
  const auto& ops = kernels::active();
  const std::vector<double> c = hybrid_coefficients(beta, b_n_, active);
  ops.linear_combine(col_ptrs_.data(), c.data(), k_, ell_.data(), points_);
  ops.softplus(ell_.data(), sp_.data(), points_);
}

void ObjectiveEvaluator::compute_rho() {
  const auto& ops = kernels::active();
  ops.mul_sub(act_.data(), ell_.data(), sp_.data(), lognum_.data(), points_);
  ops.segment_sum(lognum_.data(), n_, steps_, acc_.data());
  for (std::size_t i = 0; i < n_; ++i) acc_[i] -= logden_[i];
  ops.vexp(acc_.data(), rho_.data(), n_);
  if (config_.weight_cap > 0.0)
    for (double& r : rho_) r = std::min(r, config_.weight_cap);
}

double ObjectiveEvaluator::kl_from_buffers() {
  const auto& ops = kernels::active();
  double klsum;
  if (config_.kl_direction == KlDirection::behavioral_to_suggested) {
    klsum = klconst_sum_ + ops.sum(sp_.data(), points_) -
            ops.dot(p_.data(), ell_.data(), points_);
  } else {
    ops.expit(ell_.data(), q_.data(), points_);
    klsum = ops.dot(q_.data(), ell_.data(), points_) -
            ops.dot(q_.data(), lb_.data(), points_) -
            ops.sum(sp_.data(), points_) + spb_sum_;
  }
  // Bernoulli KL is nonnegative pointwise; clamp away summation noise
  if (klsum < 0.0) klsum = 0.0;
  return klsum / static_cast<double>(n_);
}

double ObjectiveEvaluator::value(const CoefficientVector& beta,
                                 const ActiveSet& active) {
  require_positivity();
  compute_logits(beta, active);
  compute_rho();
  return kernels::active().dot(rho_.data(), returns_.data(), n_) /
         static_cast<double>(n_);
}

double ObjectiveEvaluator::kl(const CoefficientVector& beta,
                              const ActiveSet& active) {
  compute_logits(beta, active);
  return kl_from_buffers();
}

double ObjectiveEvaluator::objective(const CoefficientVector& beta,
                                     double gamma, const ActiveSet& active) {
  return eval(beta, gamma, active).objective;
}

ObjectiveEvaluator::Eval ObjectiveEvaluator::eval(
    const CoefficientVector& beta, double gamma, const ActiveSet& active) {
  require_positivity();
  compute_logits(beta, active);
  compute_rho();
  Eval out;
  out.value = kernels::active().dot(rho_.data(), returns_.data(), n_) /
              static_cast<double>(n_);
  out.kl = kl_from_buffers();
  out.objective = out.value - gamma * out.kl;
  return out;
}

ObjectiveEvaluator::Eval ObjectiveEvaluator::eval_with_gradient(
    const CoefficientVector& beta, double gamma, const ActiveSet& active,
    Eigen::VectorXd& grad) {
  require_no_cap("gradient evaluation");
  require_positivity();
  const auto& ops = kernels::active();
  compute_logits(beta, active);
  compute_rho();

  Eval out;
  out.value = ops.dot(rho_.data(), returns_.data(), n_) /
              static_cast<double>(n_);
  out.kl = kl_from_buffers();
  out.objective = out.value - gamma * out.kl;

  ops.expit(ell_.data(), q_.data(), points_);
  ops.sub(act_.data(), q_.data(), resid_.data(), points_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double w = rho_[i] * returns_[i];
    double* dst = wexp_.data() + i * steps_;
    for (std::size_t t = 0; t < steps_; ++t) dst[t] = w;
  }
  ops.mul(wexp_.data(), resid_.data(), tmp_.data(), points_);

  // KL gradient factor per point into lognum_ (free after compute_rho)
  if (config_.kl_direction == KlDirection::behavioral_to_suggested) {
    ops.sub(q_.data(), p_.data(), lognum_.data(), points_);
  } else {
    for (std::size_t m = 0; m < points_; ++m)
      lognum_[m] = q_[m] * (1.0 - q_[m]) * (ell_[m] - lb_[m]);
  }

  grad.resize(k_);
  const double n_d = static_cast<double>(n_);
  for (std::size_t k = 0; k < k_; ++k) {
    const double g_is = ops.dot(tmp_.data(), cols_[k].data(), points_);
    const double g_kl = ops.dot(lognum_.data(), cols_[k].data(), points_);
    grad[k] = (g_is - gamma * g_kl) / n_d;
  }
  if (!active.is_full(k_))
    for (std::size_t k = 0; k < k_; ++k)
      if (!active.contains(k)) grad[k] = 0.0;
  if (!grad.allFinite())
    throw DivergenceError("non-finite gradient encountered",
                          {beta.values.begin(), beta.values.end()});
  return out;
}

DerivativeBundle ObjectiveEvaluator::derivatives(const CoefficientVector& beta,
                                                 double gamma,
                                                 const ActiveSet& active) {
  require_no_cap("derivative bundle");
  require_positivity();
  const auto& ops = kernels::active();
  compute_logits(beta, active);
  compute_rho();

  const double n_d = static_cast<double>(n_);
  ops.expit(ell_.data(), q_.data(), points_);
  ops.sub(act_.data(), q_.data(), resid_.data(), points_);

  Eigen::VectorXd w(n_);
  for (std::size_t i = 0; i < n_; ++i) w[i] = rho_[i] * returns_[i];

  // per-trajectory score sums under the hybrid policy
  Eigen::MatrixXd svec(n_, k_);
  std::vector<double> seg(n_);
  for (std::size_t k = 0; k < k_; ++k) {
    ops.mul(resid_.data(), cols_[k].data(), tmp_.data(), points_);
    ops.segment_sum(tmp_.data(), n_, steps_, seg.data());
    for (std::size_t i = 0; i < n_; ++i) svec(i, k) = seg[i];
  }

  // per-point KL factors: gradient factor kg, curvature factor hkl,
  // cross ("explicit b") factor cw2
  const bool fwd =
      config_.kl_direction == KlDirection::behavioral_to_suggested;
  std::vector<double>& kg = lognum_;
  if (fwd) {
    ops.sub(q_.data(), p_.data(), kg.data(), points_);
  } else {
    for (std::size_t m = 0; m < points_; ++m)
      kg[m] = q_[m] * (1.0 - q_[m]) * (ell_[m] - lb_[m]);
  }
  Eigen::MatrixXd klg(n_, k_);
  for (std::size_t k = 0; k < k_; ++k) {
    ops.mul(kg.data(), cols_[k].data(), tmp_.data(), points_);
    ops.segment_sum(tmp_.data(), n_, steps_, seg.data());
    for (std::size_t i = 0; i < n_; ++i) klg(i, k) = seg[i];
  }

  DerivativeBundle bundle;
  bundle.eval_beta = beta;
  bundle.eval_b = b_n_;
  bundle.gamma = gamma;

  bundle.z_per_traj = w.asDiagonal() * svec - gamma * klg;

  // point-wise x x' accumulations: cw1 for the Hessian, cw2 for the cross
  Eigen::MatrixXd hc = svec.transpose() * w.asDiagonal() * svec;
  Eigen::MatrixXd xpt = Eigen::MatrixXd::Zero(k_, k_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double wi = w[i];
    for (std::size_t t = 0; t < steps_; ++t) {
      const std::size_t m = i * steps_ + t;
      const double fq = q_[m] * (1.0 - q_[m]);
      double hkl;
      if (fwd) {
        hkl = fq;
      } else {
        hkl = fq * ((1.0 - 2.0 * q_[m]) * (ell_[m] - lb_[m]) + 1.0);
      }
      const double cw1 = -wi * fq - gamma * hkl;
      const double fp = p_[m] * (1.0 - p_[m]);
      const double cw2 = fwd ? gamma * fp : gamma * fq;
      for (std::size_t a = 0; a < k_; ++a) {
        const double xa = cols_[a][m];
        for (std::size_t b = 0; b <= a; ++b) {
          const double v = xa * cols_[b][m];
          hc(a, b) += cw1 * v;
          if (a != b) hc(b, a) += cw1 * v;
          xpt(a, b) += cw2 * v;
          if (a != b) xpt(b, a) += cw2 * v;
        }
      }
    }
  }
  hc /= n_d;

  // cross derivative in (beta, explicit b): -(1/n) svec' diag(w) sb + xpt/n
  Eigen::MatrixXd xc =
      (-(svec.transpose() * w.asDiagonal() * sb_) + xpt) / n_d;

  bundle.gradient = bundle.z_per_traj.colwise().mean().transpose();

  // mask: rows of H/X and z columns vanish off the active set; inactive b
  // slots route the c-space curvature into the cross derivative
  const std::vector<double> mask = active.mask(k_);
  bundle.hessian.resize(k_, k_);
  bundle.cross.resize(k_, k_);
  for (std::size_t j = 0; j < k_; ++j) {
    for (std::size_t l = 0; l < k_; ++l) {
      bundle.hessian(j, l) = mask[j] * mask[l] * hc(j, l);
      bundle.cross(j, l) =
          mask[j] * ((1.0 - mask[l]) * hc(j, l) + xc(j, l));
    }
  }
  for (std::size_t j = 0; j < k_; ++j)
    if (mask[j] == 0.0) {
      bundle.z_per_traj.col(j).setZero();
      bundle.gradient[j] = 0.0;
    }

  if (!bundle.gradient.allFinite() || !bundle.hessian.allFinite() ||
      !bundle.cross.allFinite())
    throw DivergenceError("non-finite derivative bundle",
                          {beta.values.begin(), beta.values.end()});
  return bundle;
}

std::vector<double> ObjectiveEvaluator::weighted_returns(
    const CoefficientVector& beta, const ActiveSet& active) {
  require_positivity();
  compute_logits(beta, active);
  compute_rho();
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = rho_[i] * returns_[i];
  return out;
}

Eigen::VectorXd ObjectiveEvaluator::value_gradient_b(
    const CoefficientVector& beta, const ActiveSet& active) {
  require_no_cap("value gradient");
  require_positivity();
  const auto& ops = kernels::active();
  compute_logits(beta, active);
  compute_rho();

  ops.expit(ell_.data(), q_.data(), points_);
  ops.sub(act_.data(), q_.data(), resid_.data(), points_);

  Eigen::VectorXd w(n_);
  for (std::size_t i = 0; i < n_; ++i) w[i] = rho_[i] * returns_[i];

  Eigen::MatrixXd svec(n_, k_);
  std::vector<double> seg(n_);
  for (std::size_t k = 0; k < k_; ++k) {
    ops.mul(resid_.data(), cols_[k].data(), tmp_.data(), points_);
    ops.segment_sum(tmp_.data(), n_, steps_, seg.data());
    for (std::size_t i = 0; i < n_; ++i) svec(i, k) = seg[i];
  }

  const Eigen::VectorXd u_hybrid = svec.transpose() * w;  // numerator slots
  const Eigen::VectorXd u_den = sb_.transpose() * w;      // denominator
  Eigen::VectorXd g(k_);
  for (std::size_t k = 0; k < k_; ++k) {
    const double slot = active.contains(k) ? 0.0 : u_hybrid[k];
    g[k] = (slot - u_den[k]) / static_cast<double>(n_);
  }
  return g;
}

double value_is(const TrajectoryDataset& data, const CoefficientVector& beta,
                const CoefficientVector& b_n, const ActiveSet& active,
                const ObjectiveConfig& config) {
  ObjectiveEvaluator ev(data, b_n, config);
  return ev.value(beta, active);
}

double kl_est(const TrajectoryDataset& data, const CoefficientVector& beta,
              const CoefficientVector& b_n, const ActiveSet& active,
              const ObjectiveConfig& config) {
  ObjectiveEvaluator ev(data, b_n, config);
  return ev.kl(beta, active);
}

double objective_m(const TrajectoryDataset& data,
                   const CoefficientVector& beta,
                   const CoefficientVector& b_n, double gamma,
                   const ActiveSet& active, const ObjectiveConfig& config) {
  ObjectiveEvaluator ev(data, b_n, config);
  return ev.objective(beta, gamma, active);
}

DerivativeBundle derivatives(const TrajectoryDataset& data,
                             const CoefficientVector& beta,
                             const CoefficientVector& b_n, double gamma,
                             const ActiveSet& active,
                             const ObjectiveConfig& config) {
  ObjectiveEvaluator ev(data, b_n, config);
  return ev.derivatives(beta, gamma, active);
}

}  // namespace relspar
