#include <cstdlib>
#include <string_view>

#include "lcz/simd/kernels.hpp"

namespace lcz::simd {

#if LCZ_HAVE_AVX2
const KernelTable& avx2_table();
#endif
#if LCZ_HAVE_NEON
const KernelTable& neon_table();
#endif

const KernelTable* avx2_kernels() {
#if LCZ_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if LCZ_HAVE_NEON
  return &neon_table();  // mandatory on AArch64
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("LCZ_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const auto* t = avx2_kernels()) return t;
    if (const auto* t = neon_kernels()) return t;
    return &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace lcz::simd
