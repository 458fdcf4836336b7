#include <atomic>
#include <cstdlib>
#include <string>

#include "mshoot/simd.hpp"
#include "mshoot/types.hpp"

namespace mshoot::simd {
namespace {

bool cpu_has_avx2() {
#if defined(MSHOOT_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* select_default() {
  const char* env = std::getenv("MSHOOT_SIMD");
  if (env && *env) {
    const std::string v(env);
    if (v == "scalar") return &detail::scalar_kernels;
    if (v == "avx2" && available(Level::avx2)) return &kernels_for(Level::avx2);
  }
  if (available(Level::avx2)) return &kernels_for(Level::avx2);
  return &detail::scalar_kernels;
}

std::atomic<const Kernels*>& slot() {
  static std::atomic<const Kernels*> s{select_default()};
  return s;
}

}  // namespace

bool available(Level level) {
  if (level == Level::scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

const Kernels& kernels_for(Level level) {
  if (level == Level::scalar) return detail::scalar_kernels;
#if defined(MSHOOT_HAVE_AVX2)
  if (available(Level::avx2)) return detail::avx2_kernels;
#endif
  throw Error("SIMD level not available on this machine");
}

const Kernels& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Level level) { slot().store(&kernels_for(level), std::memory_order_release); }

Level parse_level(std::string_view name) {
  if (name == "scalar") return Level::scalar;
  if (name == "avx2") return Level::avx2;
  throw Error("unknown SIMD level: " + std::string(name));
}

}  // namespace mshoot::simd
