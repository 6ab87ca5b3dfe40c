#include <cmath>
#include <cstddef>

#include "relspar/kernels.hpp"

// Reference implementations. Plain sequential loops over libm; the AVX2
// variant is equivalence-tested against these.

namespace relspar::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_sub_scalar(const double* a, const double* b, const double* c,
                    double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i] - c[i];
}

void linear_combine_scalar(const double* const* cols, const double* coef,
                           std::size_t ncols, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < ncols; ++k) acc += coef[k] * cols[k][i];
    out[i] = acc;
  }
}

void vexp_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void expit_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void softplus_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    out[i] = (v > 0.0 ? v : 0.0) + std::log1p(std::exp(-std::fabs(v)));
  }
}

void segment_sum_scalar(const double* x, std::size_t nseg, std::size_t len,
                        double* out) {
  for (std::size_t s = 0; s < nseg; ++s) {
    double acc = 0.0;
    const double* seg = x + s * len;
    for (std::size_t t = 0; t < len; ++t) acc += seg[t];
    out[s] = acc;
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{
      sum_scalar,        dot_scalar,     sub_scalar,
      mul_scalar,        mul_sub_scalar, linear_combine_scalar,
      vexp_scalar,       expit_scalar,   softplus_scalar,
      segment_sum_scalar,
  };
  return ops;
}

}  // namespace relspar::kernels
