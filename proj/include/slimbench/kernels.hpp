#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop arithmetic for the geometry module. Every kernel has a portable
// scalar reference; SIMD variants are selected once at runtime from CPU
// features and must agree with the reference to rounding error.
namespace slimbench::kernels {

using DotFn = double (*)(const double* a, const double* b, std::size_t n) noexcept;
using SquaredDistanceFn = double (*)(const double* a, const double* b, std::size_t n) noexcept;
using AccumulateFn = void (*)(double* dst, const double* src, std::size_t n) noexcept;
using ScaleFn = void (*)(double* dst, double factor, std::size_t n) noexcept;

struct KernelTable {
  std::string_view name;
  DotFn dot;
  SquaredDistanceFn squared_distance;
  AccumulateFn accumulate;  // dst += src
  ScaleFn scale;            // dst *= factor
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void accumulate(double* dst, const double* src, std::size_t n) noexcept;
void scale(double* dst, double factor, std::size_t n) noexcept;
}  // namespace scalar

#if defined(SLIMBENCH_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void accumulate(double* dst, const double* src, std::size_t n) noexcept;
void scale(double* dst, double factor, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(SLIMBENCH_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void accumulate(double* dst, const double* src, std::size_t n) noexcept;
void scale(double* dst, double factor, std::size_t n) noexcept;
}  // namespace neon
#endif

const KernelTable& scalar_table() noexcept;

// Null when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

// Best table for this CPU. SLIMBENCH_SIMD=scalar in the environment forces the
// reference path. Resolved once per process.
const KernelTable& active() noexcept;

}  // namespace slimbench::kernels
