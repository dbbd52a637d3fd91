#include <algorithm>
#include <cmath>

#include "lcz/simd/kernels.hpp"
#include "simd/kernels_internal.hpp"

namespace lcz::simd {
namespace {

void normalized_difference(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::nd_one(a[i], b[i]);
}

Moments masked_moments(const float* x, std::size_t n, float nodata) {
  Moments m;
  for (std::size_t i = 0; i < n; ++i) {
    const float v = x[i];
    if (detail::is_masked(v, nodata)) continue;
    m.sum += static_cast<double>(v);
    ++m.count;
    if (v != 0.0f) ++m.nonzero;
  }
  return m;
}

double masked_sq_dev(const float* x, std::size_t n, float nodata, double mean) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (detail::is_masked(x[i], nodata)) continue;
    const double d = static_cast<double>(x[i]) - mean;
    acc += d * d;
  }
  return acc;
}

void min_into(float* dst, const float* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] < dst[i] ? src[i] : dst[i];
}

void max_into(float* dst, const float* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] > dst[i] ? src[i] : dst[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",    &normalized_difference, &masked_moments,
                                 &masked_sq_dev, &min_into,             &max_into,
                                 &axpy};
  return table;
}

}  // namespace lcz::simd
