#include <cstdlib>
#include <string_view>

#include "slimbench/kernels.hpp"

namespace slimbench::kernels {
namespace {

const KernelTable kScalar{"scalar", &scalar::dot, &scalar::squared_distance, &scalar::accumulate,
                          &scalar::scale};

#if defined(SLIMBENCH_HAVE_AVX2)
const KernelTable kAvx2{"avx2", &avx2::dot, &avx2::squared_distance, &avx2::accumulate, &avx2::scale};
#endif

#if defined(SLIMBENCH_HAVE_NEON)
const KernelTable kNeon{"neon", &neon::dot, &neon::squared_distance, &neon::accumulate, &neon::scale};
#endif

const KernelTable& resolve() noexcept {
  if (const char* forced = std::getenv("SLIMBENCH_SIMD"); forced && std::string_view(forced) == "scalar") {
    return kScalar;
  }
  if (const auto* t = avx2_table()) return *t;
  if (const auto* t = neon_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(SLIMBENCH_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() noexcept {
#if defined(SLIMBENCH_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  return &kNeon;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace slimbench::kernels
