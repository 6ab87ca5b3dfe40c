#include "relspar/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relspar/errors.hpp"

namespace relspar {

void CoefficientVector::validate(std::size_t expected_dim) const {
  if (values.size() != expected_dim)
    throw ShapeError("coefficient vector has length " +
                     std::to_string(values.size()) + ", expected " +
                     std::to_string(expected_dim));
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("non-finite coefficient");
}

ActiveSet ActiveSet::full(std::size_t k_dim) {
  ActiveSet a;
  a.indices.resize(k_dim);
  std::iota(a.indices.begin(), a.indices.end(), std::size_t{0});
  return a;
}

bool ActiveSet::contains(std::size_t k) const {
  return std::binary_search(indices.begin(), indices.end(), k);
}

std::vector<std::size_t> ActiveSet::complement(std::size_t k_dim) const {
  std::vector<std::size_t> out;
  out.reserve(k_dim - indices.size());
  for (std::size_t k = 0; k < k_dim; ++k)
    if (!contains(k)) out.push_back(k);
  return out;
}

std::vector<double> ActiveSet::mask(std::size_t k_dim) const {
  std::vector<double> m(k_dim, 0.0);
  for (std::size_t k : indices) m[k] = 1.0;
  return m;
}

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double policy_prob(const CoefficientVector& coeffs,
                   std::span<const double> state, int action) {
  double logit = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k)
    logit += coeffs.values[k] * state[k];
  // clamp into the open unit interval: extreme logits would otherwise round
  // to exactly 0 or 1 and break positivity
  const double p1 = std::clamp(expit(logit), 1e-15, 1.0 - 1e-15);
  return action == 1 ? p1 : 1.0 - p1;
}

std::vector<double> hybrid_coefficients(const CoefficientVector& beta,
                                        const CoefficientVector& b,
                                        const ActiveSet& active) {
  std::vector<double> c(b.values);
  for (std::size_t k : active.indices) c[k] = beta.values[k];
  return c;
}

double hybrid_policy_prob(const CoefficientVector& beta,
                          const CoefficientVector& b, const ActiveSet& active,
                          std::span<const double> state, int action) {
  const CoefficientVector c{hybrid_coefficients(beta, b, active),
                            CoefficientRole::suggested};
  return policy_prob(c, state, action);
}

BehavioralFit fit_behavioral(const TrajectoryDataset& data,
                             const NewtonOptions& options) {
  const std::size_t n = data.n();
  const std::size_t steps = data.t_plus_1();
  const std::size_t k_dim = data.state_dim();
  const double n_d = static_cast<double>(n);

  bool saw0 = false, saw1 = false;
  for (std::int8_t a : data.actions_flat()) (a ? saw1 : saw0) = true;
  if (!saw0 || !saw1)
    throw SeparationError(
        "behavioral fit requires both actions to appear in the data");

  Eigen::VectorXd b = Eigen::VectorXd::Zero(k_dim);
  Eigen::VectorXd score(k_dim);
  Eigen::MatrixXd info(k_dim, k_dim);

  auto log_likelihood = [&](const Eigen::VectorXd& coef) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < steps; ++t) {
        const auto s = data.state(i, t);
        double logit = 0.0;
        for (std::size_t k = 0; k < k_dim; ++k) logit += coef[k] * s[k];
        // log pi(a|s) = a*logit - softplus(logit)
        const double sp =
            (logit > 0.0 ? logit : 0.0) + std::log1p(std::exp(-std::fabs(logit)));
        ll += data.action(i, t) * logit - sp;
      }
    return ll;
  };

  auto score_info = [&](const Eigen::VectorXd& coef) {
    score.setZero();
    info.setZero();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < steps; ++t) {
        const auto s = data.state(i, t);
        double logit = 0.0;
        for (std::size_t k = 0; k < k_dim; ++k) logit += coef[k] * s[k];
        const double p = expit(logit);
        const double r = data.action(i, t) - p;
        const double w = p * (1.0 - p);
        for (std::size_t k = 0; k < k_dim; ++k) {
          score[k] += r * s[k];
          for (std::size_t l = 0; l <= k; ++l) info(k, l) += w * s[k] * s[l];
        }
      }
    info = info.selfadjointView<Eigen::Lower>();
  };

  double ll = log_likelihood(b);
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    score_info(b);
    if (score.lpNorm<Eigen::Infinity>() / n_d <= options.score_tol) {
      converged = true;
      break;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0) {
      if (b.lpNorm<Eigen::Infinity>() > 1.0)
        throw SeparationError("information matrix degenerated during fit "
                              "(quasi-separated data)");
      throw SingularDesignError(
          "design matrix is rank deficient: pooled information is singular");
    }
    const Eigen::VectorXd delta = ldlt.solve(score);
    double step = 1.0;
    Eigen::VectorXd cand;
    double ll_cand = -std::numeric_limits<double>::infinity();
    while (step >= 1e-12) {
      cand = b + step * delta;
      ll_cand = log_likelihood(cand);
      if (std::isfinite(ll_cand) && ll_cand >= ll) break;
      step *= 0.5;
    }
    if (step < 1e-12) break;  // no ascent step available
    b = cand;
    ll = ll_cand;
    if (b.lpNorm<Eigen::Infinity>() > options.coef_cap)
      throw SeparationError(
          "coefficient norm exceeded " + std::to_string(options.coef_cap) +
          "; likelihood appears unbounded (separation)");
  }
  if (!converged) {
    score_info(b);
    if (score.lpNorm<Eigen::Infinity>() / n_d <= options.score_tol)
      converged = true;
    else
      throw ConvergenceError("behavioral fit did not converge in " +
                                 std::to_string(options.max_iter) +
                                 " iterations",
                             {b.data(), b.data() + b.size()});
  }

  BehavioralFit fit;
  fit.b_n.values.assign(b.data(), b.data() + b.size());
  fit.b_n.role = CoefficientRole::behavioral;
  fit.converged = converged;
  fit.iterations = iter;
  fit.scores_per_traj.resize(n, k_dim);
  fit.fisher_per_traj = Eigen::MatrixXd::Zero(k_dim, k_dim);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::RowVectorXd si = Eigen::RowVectorXd::Zero(k_dim);
    for (std::size_t t = 0; t < steps; ++t) {
      const auto s = data.state(i, t);
      double logit = 0.0;
      for (std::size_t k = 0; k < k_dim; ++k) logit += b[k] * s[k];
      const double p = expit(logit);
      const double r = data.action(i, t) - p;
      const double w = p * (1.0 - p);
      for (std::size_t k = 0; k < k_dim; ++k) {
        si[k] += r * s[k];
        for (std::size_t l = 0; l <= k; ++l)
          fit.fisher_per_traj(k, l) += w * s[k] * s[l];
      }
    }
    fit.scores_per_traj.row(i) = si;
  }
  fit.fisher_per_traj =
      Eigen::MatrixXd(fit.fisher_per_traj.selfadjointView<Eigen::Lower>()) / n_d;
  return fit;
}

Eigen::MatrixXd behavioral_influence(const BehavioralFit& fit) {
  if (!fit.converged)
    throw ParameterError("behavioral_influence requires a converged fit");
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.fisher_per_traj);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0)
    throw SingularInformationError(
        "per-trajectory information matrix is singular");
  return ldlt.solve(fit.scores_per_traj.transpose()).transpose();
}

}  // namespace relspar
