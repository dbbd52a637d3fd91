// AArch64 only; Advanced SIMD is part of the base ISA there.
#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "lcz/simd/kernels.hpp"
#include "simd/kernels_internal.hpp"

namespace lcz::simd {
namespace {

void normalized_difference(const float* a, const float* b, float* out, std::size_t n) {
  const float32x4_t one = vdupq_n_f32(1.0f);
  const float32x4_t neg_one = vdupq_n_f32(-1.0f);
  const float32x4_t nan = vdupq_n_f32(std::numeric_limits<float>::quiet_NaN());
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    const float32x4_t den = vaddq_f32(va, vb);
    float32x4_t v = vdivq_f32(vsubq_f32(va, vb), den);
    const uint32x4_t v_ok = vceqq_f32(v, v);
    v = vbslq_f32(vcgtq_f32(v, one), one, v);
    v = vbslq_f32(vcltq_f32(v, neg_one), neg_one, v);
    const uint32x4_t den_ok = vandq_u32(vceqq_f32(den, den), vmvnq_u32(vceqq_f32(den, zero)));
    vst1q_f32(out + i, vbslq_f32(vandq_u32(den_ok, v_ok), v, nan));
  }
  for (; i < n; ++i) out[i] = detail::nd_one(a[i], b[i]);
}

inline uint32x4_t valid_mask(float32x4_t v, float32x4_t nodata) {
  return vandq_u32(vceqq_f32(v, v), vmvnq_u32(vceqq_f32(v, nodata)));
}

Moments masked_moments(const float* x, std::size_t n, float nodata) {
  const float32x4_t nd = vdupq_n_f32(nodata);
  const float32x4_t zero = vdupq_n_f32(0.0f);
  float64x2_t acc_lo = vdupq_n_f64(0.0);
  float64x2_t acc_hi = vdupq_n_f64(0.0);
  uint32x4_t cnt = vdupq_n_u32(0);
  uint32x4_t nnz = vdupq_n_u32(0);
  Moments m;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    const uint32x4_t ok = valid_mask(v, nd);
    const float32x4_t kept = vreinterpretq_f32_u32(vandq_u32(vreinterpretq_u32_f32(v), ok));
    acc_lo = vaddq_f64(acc_lo, vcvt_f64_f32(vget_low_f32(kept)));
    acc_hi = vaddq_f64(acc_hi, vcvt_high_f64_f32(kept));
    cnt = vsubq_u32(cnt, ok);  // true lanes are all-ones == -1
    nnz = vsubq_u32(nnz, vandq_u32(ok, vmvnq_u32(vceqq_f32(v, zero))));
  }
  const float64x2_t acc = vaddq_f64(acc_lo, acc_hi);
  m.sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  m.count = vaddvq_u32(cnt);
  m.nonzero = vaddvq_u32(nnz);
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
  const float32x4_t nd = vdupq_n_f32(nodata);
  const float64x2_t mu = vdupq_n_f64(mean);
  float64x2_t acc_lo = vdupq_n_f64(0.0);
  float64x2_t acc_hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    const uint32x4_t ok = valid_mask(v, nd);
    const float32x4_t kept = vreinterpretq_f32_u32(vandq_u32(vreinterpretq_u32_f32(v), ok));
    const float64x2_t d_lo = vsubq_f64(vcvt_f64_f32(vget_low_f32(kept)), mu);
    const float64x2_t d_hi = vsubq_f64(vcvt_high_f64_f32(kept), mu);
    const uint64x2_t m_lo = vmovl_u32(vget_low_u32(ok));
    const uint64x2_t m_hi = vmovl_high_u32(ok);
    // vmovl zero-extends; turn 0xffffffff into a full 64-bit mask.
    const uint64x2_t full_lo = vceqq_u64(m_lo, vdupq_n_u64(0xffffffffULL));
    const uint64x2_t full_hi = vceqq_u64(m_hi, vdupq_n_u64(0xffffffffULL));
    acc_lo = vaddq_f64(acc_lo, vreinterpretq_f64_u64(vandq_u64(
                                   vreinterpretq_u64_f64(vmulq_f64(d_lo, d_lo)), full_lo)));
    acc_hi = vaddq_f64(acc_hi, vreinterpretq_f64_u64(vandq_u64(
                                   vreinterpretq_u64_f64(vmulq_f64(d_hi, d_hi)), full_hi)));
  }
  const float64x2_t acc2 = vaddq_f64(acc_lo, acc_hi);
  double acc = vgetq_lane_f64(acc2, 0) + vgetq_lane_f64(acc2, 1);
  for (; i < n; ++i) {
    if (detail::is_masked(x[i], nodata)) continue;
    const double d = static_cast<double>(x[i]) - mean;
    acc += d * d;
  }
  return acc;
}

// vminq/vmaxq propagate NaN; select explicitly to keep `a < b ? a : b` semantics.
void min_into(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t s = vld1q_f32(src + i);
    const float32x4_t d = vld1q_f32(dst + i);
    vst1q_f32(dst + i, vbslq_f32(vcltq_f32(s, d), s, d));
  }
  for (; i < n; ++i) dst[i] = src[i] < dst[i] ? src[i] : dst[i];
}

void max_into(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t s = vld1q_f32(src + i);
    const float32x4_t d = vld1q_f32(dst + i);
    vst1q_f32(dst + i, vbslq_f32(vcgtq_f32(s, d), s, d));
  }
  for (; i < n; ++i) dst[i] = src[i] > dst[i] ? src[i] : dst[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{"neon",         &normalized_difference, &masked_moments,
                                 &masked_sq_dev, &min_into,              &max_into,
                                 &axpy};
  return table;
}

}  // namespace lcz::simd
