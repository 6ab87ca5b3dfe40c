#pragma once

#include <cstddef>
#include <string_view>

namespace relspar::kernels {

// Data-parallel inner loops shared by the objective/derivative evaluators.
// Two implementations exist: a scalar reference (the oracle) and an AVX2+FMA
// variant; the active one is picked at runtime from cpuid, overridable via
// the RELSPAR_KERNELS environment variable ("scalar"/"avx2") or
// force_backend(). Inputs must be finite; NaN/Inf handling is unspecified.
//
// Reductions use a fixed summation order within each backend, so results are
// reproducible run-to-run on the same machine. Backends may differ from each
// other by small rounding (see the equivalence tests for the bounds).
struct Ops {
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out = a - b
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  // out = a * b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out = a * b - c
  void (*mul_sub)(const double* a, const double* b, const double* c,
                  double* out, std::size_t n);
  // out[i] = sum_k coef[k] * cols[k][i]
  void (*linear_combine)(const double* const* cols, const double* coef,
                         std::size_t ncols, double* out, std::size_t n);
  // exp, clamped to +-708.39... (results below exp(-708) flush toward 0,
  // above exp(709) saturate; fine for the logit magnitudes seen here)
  void (*vexp)(const double* x, double* out, std::size_t n);
  // logistic 1 / (1 + exp(-x))
  void (*expit)(const double* x, double* out, std::size_t n);
  // log(1 + exp(x)), computed as max(x,0) + log1p(exp(-|x|))
  void (*softplus)(const double* x, double* out, std::size_t n);
  // out[s] = sum of x[s*len .. s*len+len-1]
  void (*segment_sum)(const double* x, std::size_t nseg, std::size_t len,
                      double* out);
};

enum class Backend { scalar, avx2 };

bool avx2_supported();
Backend active_backend();
std::string_view backend_name(Backend b);

// Selected implementation (env override applied on first call).
const Ops& active();

// Specific implementation; throws relspar::ConfigError if unavailable.
const Ops& ops_for(Backend b);

// Overrides auto-detection for the rest of the process (tests, --kernels).
void force_backend(Backend b);

}  // namespace relspar::kernels
