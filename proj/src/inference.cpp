#include "relspar/inference.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "relspar/errors.hpp"

namespace relspar {

namespace {

std::vector<Eigen::Index> to_eigen_idx(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}

// (H_AA)^{-1} S ((H_AA)^{-1})' through a symmetric eigendecomposition with a
// condition guard. H is symmetrized first (it is symmetric up to rounding).
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& h_block,
                         const Eigen::MatrixXd& s_mid, double cond_limit) {
  const Eigen::MatrixXd hs = 0.5 * (h_block + h_block.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs);
  if (es.info() != Eigen::Success)
    throw SingularHessianError("Hessian block eigendecomposition failed");
  const Eigen::VectorXd abs_ev = es.eigenvalues().cwiseAbs();
  const double ev_max = abs_ev.maxCoeff();
  const double ev_min = abs_ev.minCoeff();
  const double cond = ev_min > 0.0
                          ? ev_max / ev_min
                          : std::numeric_limits<double>::infinity();
  if (!(cond < cond_limit))
    throw SingularHessianError(
        "Hessian block is singular or ill-conditioned (condition number " +
        std::to_string(cond) + ")");
  const Eigen::MatrixXd h_inv = es.eigenvectors() *
                                es.eigenvalues().cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
  return h_inv * s_mid * h_inv.transpose();
}

Eigen::MatrixXd middle_moment(const Eigen::MatrixXd& r, bool center) {
  const double n_d = static_cast<double>(r.rows());
  if (!center) return (r.transpose() * r) / n_d;
  const Eigen::MatrixXd rc = r.rowwise() - r.colwise().mean();
  return (rc.transpose() * rc) / n_d;
}

}  // namespace

Eigen::MatrixXd assemble_r(const DerivativeBundle& bundle,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& z,
                           const ActiveSet& active) {
  const Eigen::Index k_dim = bundle.hessian.rows();
  if (active.empty())
    throw EmptyActiveSetError(
        "active set is empty; use the behavioral variance for all "
        "coordinates");
  if (q.rows() != z.rows() || q.cols() != k_dim || z.cols() != k_dim)
    throw ShapeError("q and z must be n x K with K matching the bundle");

  const auto idx_a = to_eigen_idx(active.indices);
  const auto idx_c =
      to_eigen_idx(active.complement(static_cast<std::size_t>(k_dim)));

  const Eigen::MatrixXd& h = bundle.hessian;
  Eigen::MatrixXd r = z(Eigen::all, idx_a);
  if (!idx_c.empty()) {
    const Eigen::MatrixXd q_c = q(Eigen::all, idx_c);
    r += q_c * h(idx_c, idx_a);                 // u'_{A^C} H_{A^C A}
    r += q_c * h(idx_a, idx_c).transpose();     // u'_{A^C} (H_{A A^C})'
  }
  r += (q * bundle.cross.transpose())(Eigen::all, idx_a);  // (X q_i)_A
  return r;
}

CoefficientVariance coef_variance_adaptive(const Eigen::MatrixXd& r_matrix,
                                           const DerivativeBundle& bundle,
                                           const ActiveSet& active,
                                           const InferenceOptions& options) {
  if (active.empty())
    throw EmptyActiveSetError("adaptive variance needs a nonempty active set");
  if (r_matrix.cols() != static_cast<Eigen::Index>(active.size()))
    throw ShapeError("r matrix has " + std::to_string(r_matrix.cols()) +
                     " columns, expected |A| = " +
                     std::to_string(active.size()));

  const auto idx_a = to_eigen_idx(active.indices);
  const Eigen::MatrixXd h_block = bundle.hessian(idx_a, idx_a);

  CoefficientVariance out;
  out.active = active;
  out.n = static_cast<std::size_t>(r_matrix.rows());
  out.active_block = sandwich(h_block, middle_moment(r_matrix, options.center_r),
                              options.cond_limit);

  const std::size_t k_dim = static_cast<std::size_t>(bundle.hessian.rows());
  out.per_coordinate_se.assign(k_dim,
                               std::numeric_limits<double>::quiet_NaN());
  for (std::size_t pos = 0; pos < active.indices.size(); ++pos) {
    const double avar = out.active_block(pos, pos);
    out.per_coordinate_se[active.indices[pos]] =
        std::sqrt(std::max(avar, 0.0) / static_cast<double>(out.n));
  }
  return out;
}

std::vector<double> coef_variance_behavioral(
    const BehavioralFit& fit, const std::vector<std::size_t>& complement) {
  if (!fit.converged)
    throw ParameterError("behavioral variance requires a converged fit");
  if (complement.empty()) return {};
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.fisher_per_traj);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0)
    throw SingularInformationError(
        "per-trajectory information matrix is singular");
  const Eigen::MatrixXd inv = ldlt.solve(
      Eigen::MatrixXd::Identity(fit.fisher_per_traj.rows(),
                                fit.fisher_per_traj.cols()));
  std::vector<double> out;
  out.reserve(complement.size());
  for (std::size_t k : complement) out.push_back(inv(k, k));
  return out;
}

void merge_behavioral_variance(CoefficientVariance& variance,
                               const BehavioralFit& fit) {
  const std::size_t k_dim = variance.per_coordinate_se.size();
  const auto complement = variance.active.complement(k_dim);
  variance.behavioral_diag = coef_variance_behavioral(fit, complement);
  for (std::size_t pos = 0; pos < complement.size(); ++pos)
    variance.per_coordinate_se[complement[pos]] = std::sqrt(
        variance.behavioral_diag[pos] / static_cast<double>(variance.n));
}

Eigen::MatrixXd coef_variance_baseline(const DerivativeBundle& bundle,
                                       const Eigen::MatrixXd& q,
                                       const Eigen::MatrixXd& z,
                                       const InferenceOptions& options) {
  const std::size_t k_dim = static_cast<std::size_t>(bundle.hessian.rows());
  const ActiveSet full = ActiveSet::full(k_dim);
  const Eigen::MatrixXd r = assemble_r(bundle, q, z, full);
  return sandwich(bundle.hessian, middle_moment(r, options.center_r),
                  options.cond_limit);
}

double value_variance(ObjectiveEvaluator& objective,
                      const CoefficientVector& beta, const ActiveSet& active,
                      const Eigen::MatrixXd& q) {
  const std::vector<double> wr = objective.weighted_returns(beta, active);
  const Eigen::VectorXd g_b = objective.value_gradient_b(beta, active);
  const double n_d = static_cast<double>(wr.size());
  if (q.rows() != static_cast<Eigen::Index>(wr.size()) ||
      q.cols() != g_b.size())
    throw ShapeError("q must be n x K");

  double v_n = 0.0;
  for (double w : wr) v_n += w;
  v_n /= n_d;

  const Eigen::VectorXd shift = q * g_b;
  double s2 = 0.0;
  for (std::size_t i = 0; i < wr.size(); ++i) {
    const double c = (wr[i] - v_n) + shift[static_cast<Eigen::Index>(i)];
    s2 += c * c;
  }
  return s2 / (n_d * n_d);
}

double value_variance(const TrajectoryDataset& data,
                      const CoefficientVector& beta,
                      const CoefficientVector& b_n, const ActiveSet& active,
                      const Eigen::MatrixXd& q, const ObjectiveConfig& config) {
  ObjectiveEvaluator objective(data, b_n, config);
  return value_variance(objective, beta, active, q);
}

}  // namespace relspar
