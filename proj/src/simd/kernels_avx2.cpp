// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>
#include <limits>

#include "lcz/simd/kernels.hpp"
#include "simd/kernels_internal.hpp"

namespace lcz::simd {
namespace {

void normalized_difference(const float* a, const float* b, float* out, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 neg_one = _mm256_set1_ps(-1.0f);
  const __m256 nan = _mm256_set1_ps(std::numeric_limits<float>::quiet_NaN());
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256 den = _mm256_add_ps(va, vb);
    __m256 v = _mm256_div_ps(_mm256_sub_ps(va, vb), den);
    const __m256 v_nan = _mm256_cmp_ps(v, v, _CMP_UNORD_Q);
    v = _mm256_min_ps(_mm256_max_ps(v, neg_one), one);
    const __m256 bad = _mm256_or_ps(_mm256_or_ps(_mm256_cmp_ps(den, zero, _CMP_EQ_OQ),
                                                 _mm256_cmp_ps(den, den, _CMP_UNORD_Q)),
                                    v_nan);
    _mm256_storeu_ps(out + i, _mm256_blendv_ps(v, nan, bad));
  }
  for (; i < n; ++i) out[i] = detail::nd_one(a[i], b[i]);
}

inline __m256 valid_mask(__m256 v, __m256 nodata) {
  return _mm256_andnot_ps(_mm256_cmp_ps(v, nodata, _CMP_EQ_OQ),
                          _mm256_cmp_ps(v, v, _CMP_ORD_Q));
}

inline __m256d widen_mask_lo(__m256 m) {
  return _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm256_castsi256_si128(_mm256_castps_si256(m))));
}
inline __m256d widen_mask_hi(__m256 m) {
  return _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm256_extracti128_si256(_mm256_castps_si256(m), 1)));
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

Moments masked_moments(const float* x, std::size_t n, float nodata) {
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256 zero = _mm256_setzero_ps();
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  Moments m;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 ok = valid_mask(v, nd);
    const __m256 kept = _mm256_and_ps(v, ok);
    acc_lo = _mm256_add_pd(acc_lo, _mm256_cvtps_pd(_mm256_castps256_ps128(kept)));
    acc_hi = _mm256_add_pd(acc_hi, _mm256_cvtps_pd(_mm256_extractf128_ps(kept, 1)));
    m.count += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_ps(ok)));
    const __m256 nz = _mm256_and_ps(ok, _mm256_cmp_ps(v, zero, _CMP_NEQ_OQ));
    m.nonzero += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_ps(nz)));
  }
  m.sum = hsum(_mm256_add_pd(acc_lo, acc_hi));
  for (; i < n; ++i) {
    const float v = x[i];
    if (detail::is_masked(v, nodata)) continue;
    m.sum += static_cast<double>(v);
    ++m.count;
    if (v != 0.0f) ++m.nonzero;
  }
  return m;
}

double masked_sq_dev(const float* x, std::size_t n, float nodata, double mean) {
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256d mu = _mm256_set1_pd(mean);
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 ok = valid_mask(v, nd);
    const __m256 kept = _mm256_and_ps(v, ok);
    const __m256d d_lo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(kept)), mu);
    const __m256d d_hi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(kept, 1)), mu);
    acc_lo = _mm256_add_pd(acc_lo, _mm256_and_pd(_mm256_mul_pd(d_lo, d_lo), widen_mask_lo(ok)));
    acc_hi = _mm256_add_pd(acc_hi, _mm256_and_pd(_mm256_mul_pd(d_hi, d_hi), widen_mask_hi(ok)));
  }
  double acc = hsum(_mm256_add_pd(acc_lo, acc_hi));
  for (; i < n; ++i) {
    if (detail::is_masked(x[i], nodata)) continue;
    const double d = static_cast<double>(x[i]) - mean;
    acc += d * d;
  }
  return acc;
}

// _mm256_min_ps(a, b) returns b when either is NaN, matching `a < b ? a : b`.
void min_into(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_min_ps(_mm256_loadu_ps(src + i), _mm256_loadu_ps(dst + i)));
  }
  for (; i < n; ++i) dst[i] = src[i] < dst[i] ? src[i] : dst[i];
}

void max_into(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_max_ps(_mm256_loadu_ps(src + i), _mm256_loadu_ps(dst + i)));
  }
  for (; i < n; ++i) dst[i] = src[i] > dst[i] ? src[i] : dst[i];
}

// Separate multiply and add (no FMA) so results match the scalar path bit for bit.
void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2",         &normalized_difference, &masked_moments,
                                 &masked_sq_dev, &min_into,              &max_into,
                                 &axpy};
  return table;
}

}  // namespace lcz::simd
