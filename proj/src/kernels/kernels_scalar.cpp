#include "slimbench/kernels.hpp"

namespace slimbench::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void accumulate(double* dst, const double* src, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void scale(double* dst, double factor, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) dst[i] *= factor;
}

}  // namespace slimbench::kernels::scalar
