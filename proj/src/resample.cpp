#include <algorithm>
#include <array>
#include <cmath>

#include "lcz/error.hpp"
#include "lcz/raster.hpp"
#include "lcz/simd/kernels.hpp"

namespace lcz {
namespace {

// Catmull-Rom (Keys, a = -0.5) weights for taps at offsets -1, 0, 1, 2.
std::array<double, 4> catmull_rom(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {-0.5 * t3 + t2 - 0.5 * t,
          1.5 * t3 - 2.5 * t2 + 1.0,
          -1.5 * t3 + 2.0 * t2 + 0.5 * t,
          0.5 * t3 - 0.5 * t2};
}

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
  int cover;  // source pixel containing the output pixel
};

std::vector<Taps> make_taps(int src_len, int factor) {
  std::vector<Taps> taps(static_cast<std::size_t>(src_len) * factor);
  for (int o = 0; o < src_len * factor; ++o) {
    const double s = (o + 0.5) / factor - 0.5;
    const int i0 = static_cast<int>(std::floor(s));
    Taps& t = taps[o];
    t.weight = catmull_rom(s - i0);
    for (int k = 0; k < 4; ++k) t.index[k] = std::clamp(i0 - 1 + k, 0, src_len - 1);
    t.cover = o / factor;
  }
  return taps;
}

void check_grid(const Raster& r, const PatchGrid& grid) {
  if (std::abs(r.pixel_size() - grid.source_pixel_size) > 1e-9 * grid.source_pixel_size) {
    throw UsageError("patch grid resolution does not match raster pixel size");
  }
  const int k = grid.factor();
  if (r.width() != grid.patch_cols * k || r.height() != grid.patch_rows * k) {
    throw UsageError("raster dimensions do not match patch grid (crop ragged borders first)");
  }
}

}  // namespace

Raster upsample_bicubic(const Raster& r, double target_pixel_size) {
  const int f = integer_ratio(r.pixel_size(), target_pixel_size, "upsample_bicubic");
  if (r.width() < 2 || r.height() < 2) throw UsageError("upsample_bicubic: raster smaller than 2x2");
  Raster out(r.width() * f, r.height() * f, target_pixel_size, 0.0f, r.dtype());
  out.set_nodata(r.nodata());
  const float nodata_out = std::isnan(r.nodata()) ? kNoData : r.nodata();
  const auto tx = make_taps(r.width(), f);
  const auto ty = make_taps(r.height(), f);

  for (int oy = 0; oy < out.height(); ++oy) {
    const Taps& vy = ty[oy];
    for (int ox = 0; ox < out.width(); ++ox) {
      const Taps& vx = tx[ox];
      const float centre = r.at(vy.cover, vx.cover);
      if (r.is_nodata(centre)) {
        out.at(oy, ox) = nodata_out;
        continue;
      }
      double acc = 0.0;
      for (int a = 0; a < 4; ++a) {
        double row_acc = 0.0;
        for (int b = 0; b < 4; ++b) {
          float v = r.at(vy.index[a], vx.index[b]);
          if (r.is_nodata(v)) v = centre;
          row_acc += vx.weight[b] * v;
        }
        acc += vy.weight[a] * row_acc;
      }
      out.at(oy, ox) = static_cast<float>(acc);
    }
  }
  return out;
}

Raster downsample_nearest(const Raster& r, double target_pixel_size) {
  const int k = integer_ratio(target_pixel_size, r.pixel_size(), "downsample_nearest");
  const int w = r.width() / k;
  const int h = r.height() / k;
  if (w == 0 || h == 0) throw UsageError("downsample_nearest: raster smaller than one output pixel");
  Raster out(w, h, target_pixel_size, 0.0f, r.dtype());
  out.set_nodata(r.nodata());
  // Source pixel containing the output centre (o + 0.5) * k, left/top inclusive.
  auto pick = [k](int o) { return static_cast<int>(std::floor((o + 0.5) * k)); };
  for (int y = 0; y < h; ++y) {
    const int sy = pick(y);
    for (int x = 0; x < w; ++x) out.at(y, x) = r.at(sy, pick(x));
  }
  return out;
}

Raster patch_reduce(const Raster& r, const PatchGrid& grid, PatchStat stat) {
  check_grid(r, grid);
  const int k = grid.factor();
  const auto& kern = simd::active();
  const std::size_t np = grid.patch_count();
  std::vector<simd::Moments> acc(np);

  for (int y = 0; y < r.height(); ++y) {
    const float* row = r.row(y).data();
    const std::size_t base = static_cast<std::size_t>(y / k) * grid.patch_cols;
    for (int pc = 0; pc < grid.patch_cols; ++pc) {
      const auto m = kern.masked_moments(row + static_cast<std::size_t>(pc) * k, k, r.nodata());
      auto& a = acc[base + pc];
      a.sum += m.sum;
      a.count += m.count;
      a.nonzero += m.nonzero;
    }
  }

  std::vector<double> sq;
  if (stat == PatchStat::std) {
    sq.assign(np, 0.0);
    for (int y = 0; y < r.height(); ++y) {
      const float* row = r.row(y).data();
      const std::size_t base = static_cast<std::size_t>(y / k) * grid.patch_cols;
      for (int pc = 0; pc < grid.patch_cols; ++pc) {
        const auto& a = acc[base + pc];
        if (a.count == 0) continue;
        sq[base + pc] += kern.masked_sq_dev(row + static_cast<std::size_t>(pc) * k, k, r.nodata(),
                                            a.sum / static_cast<double>(a.count));
      }
    }
  }

  Raster out(grid.patch_cols, grid.patch_rows, grid.patch_size_m, 0.0f);
  auto vals = out.values();
  for (std::size_t p = 0; p < np; ++p) {
    const auto& a = acc[p];
    if (a.count == 0) {
      vals[p] = kNoData;
      continue;
    }
    const double n = static_cast<double>(a.count);
    switch (stat) {
      case PatchStat::mean: vals[p] = static_cast<float>(a.sum / n); break;
      case PatchStat::std: vals[p] = static_cast<float>(std::sqrt(sq[p] / n)); break;
      case PatchStat::count_nonzero: vals[p] = static_cast<float>(a.nonzero); break;
      case PatchStat::fraction_nonzero: vals[p] = static_cast<float>(a.nonzero / n); break;
    }
  }
  return out;
}

PatchCounts patch_counts(const Raster& r, const PatchGrid& grid) {
  check_grid(r, grid);
  const int k = grid.factor();
  const auto& kern = simd::active();
  PatchCounts pc;
  pc.valid.assign(grid.patch_count(), 0);
  pc.nonzero.assign(grid.patch_count(), 0);
  for (int y = 0; y < r.height(); ++y) {
    const float* row = r.row(y).data();
    const std::size_t base = static_cast<std::size_t>(y / k) * grid.patch_cols;
    for (int c = 0; c < grid.patch_cols; ++c) {
      const auto m = kern.masked_moments(row + static_cast<std::size_t>(c) * k, k, r.nodata());
      pc.valid[base + c] += static_cast<std::uint32_t>(m.count);
      pc.nonzero[base + c] += static_cast<std::uint32_t>(m.nonzero);
    }
  }
  return pc;
}

}  // namespace lcz
