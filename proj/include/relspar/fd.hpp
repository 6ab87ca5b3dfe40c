#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace relspar::fd {

// Central finite differences of scalar functions of (beta, b); the step for
// coordinate j is h * max(1, |x_j|).
using Fn2 = std::function<double(const std::vector<double>&,
                                 const std::vector<double>&)>;

inline double step_for(double x, double h) {
  return h * std::max(1.0, std::fabs(x));
}

inline Eigen::VectorXd gradient_beta(const Fn2& f, std::vector<double> beta,
                                     const std::vector<double>& b,
                                     double h = 1e-5) {
  Eigen::VectorXd g(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double hj = step_for(beta[j], h);
    const double save = beta[j];
    beta[j] = save + hj;
    const double fp = f(beta, b);
    beta[j] = save - hj;
    const double fm = f(beta, b);
    beta[j] = save;
    g[j] = (fp - fm) / (2.0 * hj);
  }
  return g;
}

inline Eigen::MatrixXd hessian_beta(const Fn2& f, std::vector<double> beta,
                                    const std::vector<double>& b,
                                    double h = 1e-5) {
  const std::size_t k = beta.size();
  Eigen::MatrixXd out(k, k);
  const double f0 = f(beta, b);
  for (std::size_t j = 0; j < k; ++j) {
    const double hj = step_for(beta[j], h);
    const double sj = beta[j];
    beta[j] = sj + hj;
    const double fp = f(beta, b);
    beta[j] = sj - hj;
    const double fm = f(beta, b);
    beta[j] = sj;
    out(j, j) = (fp - 2.0 * f0 + fm) / (hj * hj);
    for (std::size_t l = j + 1; l < k; ++l) {
      const double hl = step_for(beta[l], h);
      const double sl = beta[l];
      beta[j] = sj + hj; beta[l] = sl + hl;
      const double fpp = f(beta, b);
      beta[l] = sl - hl;
      const double fpm = f(beta, b);
      beta[j] = sj - hj; beta[l] = sl + hl;
      const double fmp = f(beta, b);
      beta[l] = sl - hl;
      const double fmm = f(beta, b);
      beta[j] = sj; beta[l] = sl;
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * hj * hl);
      out(j, l) = v;
      out(l, j) = v;
    }
  }
  return out;
}

// rows: beta coordinate, cols: b coordinate
inline Eigen::MatrixXd cross_beta_b(const Fn2& f, std::vector<double> beta,
                                    std::vector<double> b, double h = 1e-5) {
  const std::size_t k = beta.size();
  Eigen::MatrixXd out(k, b.size());
  for (std::size_t j = 0; j < k; ++j) {
    const double hj = step_for(beta[j], h);
    const double sj = beta[j];
    for (std::size_t l = 0; l < b.size(); ++l) {
      const double hl = step_for(b[l], h);
      const double sl = b[l];
      beta[j] = sj + hj; b[l] = sl + hl;
      const double fpp = f(beta, b);
      b[l] = sl - hl;
      const double fpm = f(beta, b);
      beta[j] = sj - hj; b[l] = sl + hl;
      const double fmp = f(beta, b);
      b[l] = sl - hl;
      const double fmm = f(beta, b);
      beta[j] = sj; b[l] = sl;
      out(j, l) = (fpp - fpm - fmp + fmm) / (4.0 * hj * hl);
    }
  }
  return out;
}

// |a - b| <= tol * max(1, max|a|): the matrix-scale relative criterion used
// by the derivative checks.
inline double scaled_max_err(const Eigen::MatrixXd& got,
                             const Eigen::MatrixXd& want) {
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace relspar::fd
