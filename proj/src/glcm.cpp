#include <algorithm>
#include <cmath>
#include <limits>

#include "lcz/error.hpp"
#include "lcz/features.hpp"

namespace lcz {
namespace {

struct Offset {
  int dy;
  int dx;
};

// Row/column displacement; 45 degrees points up and to the right.
Offset direction_offset(int deg, int d) {
  switch (deg) {
    case 0: return {0, d};
    case 45: return {-d, d};
    case 90: return {-d, 0};
    case 135: return {-d, -d};
    default: throw UsageError("GLCM direction must be one of 0, 45, 90, 135");
  }
}

void check_options(const GlcmOptions& opts) {
  if (opts.levels < 2) throw UsageError("GLCM levels must be >= 2");
  if (opts.levels > 256) throw UsageError("GLCM levels must be <= 256");
  if (opts.offset < 1) throw UsageError("GLCM offset must be >= 1");
  if (opts.directions_deg.empty()) throw UsageError("GLCM needs at least one direction");
  for (int d : opts.directions_deg) (void)direction_offset(d, 1);
  if (!opts.direction_weights.empty() &&
      opts.direction_weights.size() != opts.directions_deg.size()) {
    throw UsageError("GLCM direction weights must match directions");
  }
}

}  // namespace

std::vector<int> quantize_patch(std::span<const float> values, int levels, float nodata) {
  auto masked = [nodata](float v) { return std::isnan(v) || v == nodata; };
  float lo = std::numeric_limits<float>::infinity();
  float hi = -lo;
  for (float v : values) {
    if (masked(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<int> q(values.size(), -1);
  const double range = static_cast<double>(hi) - static_cast<double>(lo);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (masked(values[i])) continue;
    if (!(range > 0.0)) {
      q[i] = 0;
      continue;
    }
    const double t = (static_cast<double>(values[i]) - lo) / range;
    q[i] = std::min(levels - 1, static_cast<int>(std::floor(t * levels)));
  }
  return q;
}

std::vector<double> cooccurrence(std::span<const int> quantized, int width, int height,
                                 int levels, int direction_deg, int offset) {
  const Offset o = direction_offset(direction_deg, offset);
  std::vector<double> p(static_cast<std::size_t>(levels) * levels, 0.0);
  double total = 0.0;
  for (int y = 0; y < height; ++y) {
    const int y2 = y + o.dy;
    if (y2 < 0 || y2 >= height) continue;
    for (int x = 0; x < width; ++x) {
      const int x2 = x + o.dx;
      if (x2 < 0 || x2 >= width) continue;
      const int a = quantized[static_cast<std::size_t>(y) * width + x];
      const int b = quantized[static_cast<std::size_t>(y2) * width + x2];
      if (a < 0 || b < 0) continue;
      p[static_cast<std::size_t>(a) * levels + b] += 1.0;
      p[static_cast<std::size_t>(b) * levels + a] += 1.0;
      total += 2.0;
    }
  }
  if (total == 0.0) return {};
  for (auto& v : p) v /= total;
  return p;
}

GlcmStats haralick(std::span<const double> p, int levels) {
  GlcmStats s;
  double mu = 0.0;
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const double v = p[static_cast<std::size_t>(i) * levels + j];
      if (v == 0.0) continue;
      const double d = i - j;
      s.contrast += d * d * v;
      s.energy += v * v;
      s.homogeneity += v / (1.0 + std::abs(d));
      mu += i * v;
    }
  }
  // The matrix is symmetric, so row and column marginals coincide.
  double var = 0.0;
  double cov = 0.0;
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const double v = p[static_cast<std::size_t>(i) * levels + j];
      if (v == 0.0) continue;
      var += (i - mu) * (i - mu) * v;
      cov += (i - mu) * (j - mu) * v;
    }
  }
  s.correlation = var > 1e-12 ? std::clamp(cov / var, -1.0, 1.0) : 1.0;
  return s;
}

std::optional<GlcmStats> glcm_patch(std::span<const float> values, int width, int height,
                                    const GlcmOptions& opts, float nodata) {
  check_options(opts);
  if (width < opts.offset + 1 && height < opts.offset + 1) {
    throw UsageError("GLCM patch smaller than offset+1 in both dimensions");
  }
  const auto q = quantize_patch(values, opts.levels, nodata);
  GlcmStats acc;
  double wsum = 0.0;
  for (std::size_t d = 0; d < opts.directions_deg.size(); ++d) {
    const auto p = cooccurrence(q, width, height, opts.levels, opts.directions_deg[d], opts.offset);
    if (p.empty()) continue;
    const double w = opts.direction_weights.empty() ? 1.0 : opts.direction_weights[d];
    if (w == 0.0) continue;
    const GlcmStats s = haralick(p, opts.levels);
    acc.contrast += w * s.contrast;
    acc.correlation += w * s.correlation;
    acc.energy += w * s.energy;
    acc.homogeneity += w * s.homogeneity;
    wsum += w;
  }
  if (wsum == 0.0) return std::nullopt;
  acc.contrast /= wsum;
  acc.correlation /= wsum;
  acc.energy /= wsum;
  acc.homogeneity /= wsum;
  return acc;
}

std::array<Raster, 4> glcm_features(const Raster& band, const GlcmOptions& opts,
                                    double patch_size_m) {
  check_options(opts);
  const PatchGrid grid = PatchGrid::covering(band, patch_size_m);
  const int k = grid.factor();
  std::array<Raster, 4> out{
      Raster(grid.patch_cols, grid.patch_rows, patch_size_m, kNoData),
      Raster(grid.patch_cols, grid.patch_rows, patch_size_m, kNoData),
      Raster(grid.patch_cols, grid.patch_rows, patch_size_m, kNoData),
      Raster(grid.patch_cols, grid.patch_rows, patch_size_m, kNoData)};
  std::vector<float> patch(static_cast<std::size_t>(k) * k);
  for (int pr = 0; pr < grid.patch_rows; ++pr) {
    for (int pc = 0; pc < grid.patch_cols; ++pc) {
      for (int y = 0; y < k; ++y) {
        const auto src = band.row(pr * k + y);
        std::copy(src.begin() + pc * k, src.begin() + (pc + 1) * k, patch.begin() + y * k);
      }
      const auto s = glcm_patch(patch, k, k, opts, band.nodata());
      if (!s) continue;
      out[0].at(pr, pc) = static_cast<float>(s->contrast);
      out[1].at(pr, pc) = static_cast<float>(s->correlation);
      out[2].at(pr, pc) = static_cast<float>(s->energy);
      out[3].at(pr, pc) = static_cast<float>(s->homogeneity);
    }
  }
  return out;
}

}  // namespace lcz
