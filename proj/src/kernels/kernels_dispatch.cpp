#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "relspar/errors.hpp"
#include "relspar/kernels.hpp"

namespace relspar::kernels {

const Ops& scalar_ops();
#ifdef RELSPAR_HAVE_AVX2_TU
const Ops& avx2_ops();
#endif

namespace {

std::atomic<int> g_forced{-1};  // -1 = auto

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(RELSPAR_HAVE_AVX2_TU)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("RELSPAR_KERNELS")) {
    const std::string_view v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2") {
      if (!cpu_has_avx2())
        throw ConfigError("RELSPAR_KERNELS=avx2 but AVX2 is unavailable");
      return Backend::avx2;
    }
    if (!v.empty() && v != "auto")
      throw ConfigError("unknown RELSPAR_KERNELS value: " + std::string(v));
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

}  // namespace

bool avx2_supported() { return cpu_has_avx2(); }

std::string_view backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

const Ops& ops_for(Backend b) {
  if (b == Backend::scalar) return scalar_ops();
#ifdef RELSPAR_HAVE_AVX2_TU
  if (cpu_has_avx2()) return avx2_ops();
#endif
  throw ConfigError("requested kernel backend unavailable: avx2");
}

Backend active_backend() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Backend>(forced);
  static const Backend detected = detect();
  return detected;
}

const Ops& active() { return ops_for(active_backend()); }

void force_backend(Backend b) {
  ops_for(b);  // validate availability
  g_forced.store(static_cast<int>(b), std::memory_order_relaxed);
}

}  // namespace relspar::kernels
