#include <cmath>
#include <limits>

#include "lcz/error.hpp"
#include "lcz/features.hpp"
#include "lcz/simd/kernels.hpp"

namespace lcz {
namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

enum class Op { min, max };

// Row-wise extremum over [x-w, x+w] for every w in 0..max_w, grown one
// column per side each step: H_w(x) = op(H_{w-1}(x), src(x-w), src(x+w)).
std::vector<std::vector<float>> horizontal_windows(const std::vector<float>& src, int width,
                                                   int height, int max_w, Op op) {
  const auto& kern = simd::active();
  auto combine = op == Op::min ? kern.min_into : kern.max_into;
  std::vector<std::vector<float>> h(static_cast<std::size_t>(max_w) + 1);
  h[0] = src;
  for (int w = 1; w <= max_w; ++w) {
    h[w] = h[w - 1];
    if (w >= width) continue;
    const auto n = static_cast<std::size_t>(width - w);
    for (int y = 0; y < height; ++y) {
      const float* s = src.data() + static_cast<std::size_t>(y) * width;
      float* c = h[w].data() + static_cast<std::size_t>(y) * width;
      combine(c + w, s, n);  // left neighbour x-w
      combine(c, s + w, n);  // right neighbour x+w
    }
  }
  return h;
}

// Extremum over a symmetric SE described by per-row half widths; half_width[dy + r].
Raster window_filter(const Raster& r, int radius, const std::vector<int>& half_width, Op op) {
  const int w = r.width();
  const int h = r.height();
  const float pad = op == Op::min ? kInf : -kInf;
  std::vector<float> src(r.values().begin(), r.values().end());
  for (auto& v : src) {
    if (r.is_nodata(v)) v = pad;
  }
  int max_w = 0;
  for (int hw : half_width) max_w = std::max(max_w, hw);
  const auto hwin = horizontal_windows(src, w, h, max_w, op);

  const auto& kern = simd::active();
  auto combine = op == Op::min ? kern.min_into : kern.max_into;
  Raster out(w, h, r.pixel_size(), pad, r.dtype());
  out.set_nodata(r.nodata());
  for (int y = 0; y < h; ++y) {
    float* dst = out.row(y).data();
    for (int dy = -radius; dy <= radius; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= h) continue;
      const auto& layer = hwin[static_cast<std::size_t>(half_width[dy + radius])];
      combine(dst, layer.data() + static_cast<std::size_t>(yy) * w, static_cast<std::size_t>(w));
    }
  }
  const float nd = std::isnan(r.nodata()) ? kNoData : r.nodata();
  auto ov = out.values();
  const auto iv = r.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    if (r.is_nodata(iv[i])) ov[i] = nd;
  }
  return out;
}

std::vector<int> disk_half_widths(int radius) {
  std::vector<int> hw;
  hw.reserve(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    int x = 0;
    while ((x + 1) * (x + 1) + dy * dy <= radius * radius) ++x;
    hw.push_back(x);
  }
  return hw;
}

void check_radius(int radius) {
  if (radius < 1) throw UsageError("structuring element radius must be >= 1");
}

}  // namespace

Raster erode_disk(const Raster& r, int radius) {
  check_radius(radius);
  return window_filter(r, radius, disk_half_widths(radius), Op::min);
}

Raster dilate_disk(const Raster& r, int radius) {
  check_radius(radius);
  return window_filter(r, radius, disk_half_widths(radius), Op::max);
}

Raster open_disk(const Raster& r, int radius) { return dilate_disk(erode_disk(r, radius), radius); }

Raster close_disk(const Raster& r, int radius) { return erode_disk(dilate_disk(r, radius), radius); }

Raster box_max(const Raster& r, int radius) {
  if (radius < 0) throw UsageError("window radius must be >= 0");
  return window_filter(r, radius, std::vector<int>(2 * radius + 1, radius), Op::max);
}

std::vector<Raster> morphological_profile(const Raster& ndvi, const std::vector<int>& se_radii) {
  std::vector<Raster> out;
  out.reserve(se_radii.size() * 2);
  for (int radius : se_radii) {
    check_radius(radius);
    out.push_back(open_disk(ndvi, radius));
    out.push_back(close_disk(ndvi, radius));
  }
  return out;
}

}  // namespace lcz
