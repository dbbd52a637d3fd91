#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the raster and forest code. Every kernel
// has a scalar reference implementation; vector variants must agree with it
// exactly for element-wise kernels and to summation-order rounding for
// reductions.
namespace lcz::simd {

struct Moments {
  double sum = 0.0;
  std::size_t count = 0;    // valid (non-nodata) elements
  std::size_t nonzero = 0;  // valid elements != 0
};

struct KernelTable {
  std::string_view name;

  /// out[i] = (a-b)/(a+b) clamped to [-1,1]; NaN when a+b == 0 or either is NaN.
  void (*normalized_difference)(const float* a, const float* b, float* out,
                                std::size_t n);
  /// Sum/count/nonzero over elements that are neither NaN nor `nodata`.
  Moments (*masked_moments)(const float* x, std::size_t n, float nodata);
  /// Sum of (x - mean)^2 over valid elements.
  double (*masked_sq_dev)(const float* x, std::size_t n, float nodata, double mean);
  void (*min_into)(float* dst, const float* src, std::size_t n);
  void (*max_into)(float* dst, const float* src, std::size_t n);
  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or not supported by the running CPU.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Best table for this CPU. LCZ_SIMD=scalar in the environment forces the
/// reference path.
const KernelTable& active();

}  // namespace lcz::simd
