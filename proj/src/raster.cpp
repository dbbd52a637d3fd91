#include <cmath>
#include <string>

#include "lcz/error.hpp"
#include "lcz/raster.hpp"

namespace lcz {

Raster::Raster(int width, int height, double pixel_size, float fill, DType dtype)
    : width_(width), height_(height), pixel_size_(pixel_size), dtype_(dtype),
      nodata_(dtype == DType::u8 ? kLabelNoData : kNoData) {
  if (width <= 0 || height <= 0) throw DataError("empty raster");
  if (!(pixel_size > 0.0)) throw UsageError("pixel size must be positive");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Raster Raster::make_u8(int width, int height, double pixel_size, std::uint8_t fill) {
  return Raster(width, height, pixel_size, static_cast<float>(fill), DType::u8);
}

int integer_ratio(double a, double b, const char* what) {
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError(std::string(what) + ": non-positive size");
  const double q = a / b;
  const double r = std::round(q);
  if (r < 1.0 || std::abs(q - r) > 1e-9 * r) {
    throw UsageError(std::string(what) + ": non-integer scale factor " + std::to_string(q));
  }
  return static_cast<int>(r);
}

int PatchGrid::factor() const {
  return integer_ratio(patch_size_m, source_pixel_size, "patch grid");
}

PatchGrid PatchGrid::covering(const Raster& r, double patch_size_m) {
  PatchGrid g;
  g.patch_size_m = patch_size_m;
  g.source_pixel_size = r.pixel_size();
  const int k = g.factor();
  g.patch_rows = r.height() / k;
  g.patch_cols = r.width() / k;
  if (g.patch_rows == 0 || g.patch_cols == 0) {
    throw DataError("raster smaller than one patch");
  }
  return g;
}

PatchGrid PatchGrid::with_source(double pixel_size) const {
  PatchGrid g = *this;
  g.source_pixel_size = pixel_size;
  (void)g.factor();
  return g;
}

Raster crop(const Raster& r, int rows, int cols) {
  if (rows > r.height() || cols > r.width()) throw UsageError("crop larger than raster");
  if (rows == r.height() && cols == r.width()) return r;
  Raster out(cols, rows, r.pixel_size(), 0.0f, r.dtype());
  out.set_nodata(r.nodata());
  for (int y = 0; y < rows; ++y) {
    const auto src = r.row(y);
    auto dst = out.row(y);
    std::copy(src.begin(), src.begin() + cols, dst.begin());
  }
  return out;
}

}  // namespace lcz
