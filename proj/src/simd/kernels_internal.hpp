#pragma once

#include <cmath>
#include <limits>

namespace lcz::simd::detail {

inline bool is_masked(float v, float nodata) {
  return std::isnan(v) || v == nodata;
}

inline float nd_one(float a, float b) {
  const float den = a + b;
  if (den == 0.0f || std::isnan(den)) return std::numeric_limits<float>::quiet_NaN();
  float v = (a - b) / den;
  if (v > 1.0f) v = 1.0f;
  if (v < -1.0f) v = -1.0f;
  return v;
}

}  // namespace lcz::simd::detail
