#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace lcz {

enum class DType : std::uint8_t { f32, u8 };

inline constexpr float kNoData = std::numeric_limits<float>::quiet_NaN();
inline constexpr float kLabelNoData = 255.0f;

/// Single-band row-major grid. Values are held as float regardless of the
/// on-disk dtype; u8 rasters store small integers (labels, classes, masks).
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double pixel_size, float fill = 0.0f,
         DType dtype = DType::f32);

  /// u8 raster with nodata 255, the carrier for label maps and masks.
  static Raster make_u8(int width, int height, double pixel_size,
                        std::uint8_t fill = 255);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double pixel_size() const noexcept { return pixel_size_; }
  DType dtype() const noexcept { return dtype_; }
  float nodata() const noexcept { return nodata_; }
  void set_nodata(float v) noexcept { nodata_ = v; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  bool is_nodata(float v) const noexcept {
    return std::isnan(v) || (!std::isnan(nodata_) && v == nodata_);
  }

  float at(int row, int col) const noexcept {
    return values_[static_cast<std::size_t>(row) * width_ + col];
  }
  float& at(int row, int col) noexcept {
    return values_[static_cast<std::size_t>(row) * width_ + col];
  }
  bool valid(int row, int col) const noexcept { return !is_nodata(at(row, col)); }

  std::span<const float> row(int r) const noexcept {
    return {values_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<float> row(int r) noexcept {
    return {values_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  bool same_shape(const Raster& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  double extent_x_m() const noexcept { return width_ * pixel_size_; }
  double extent_y_m() const noexcept { return height_ * pixel_size_; }

 private:
  int width_ = 0;
  int height_ = 0;
  double pixel_size_ = 0.0;
  DType dtype_ = DType::f32;
  float nodata_ = kNoData;
  std::vector<float> values_;
};

/// Tiling of a raster into square patches of `patch_size_m` meters.
struct PatchGrid {
  int patch_rows = 0;
  int patch_cols = 0;
  double patch_size_m = 100.0;
  double source_pixel_size = 10.0;

  /// Source pixels per patch side; throws when the ratio is not an integer.
  int factor() const;

  /// Largest grid fitting inside `r`; ragged bottom/right borders are dropped.
  static PatchGrid covering(const Raster& r, double patch_size_m = 100.0);
  /// Same patch layout re-expressed for a raster of another resolution.
  PatchGrid with_source(double pixel_size) const;

  std::size_t patch_count() const noexcept {
    return static_cast<std::size_t>(patch_rows) * patch_cols;
  }
};

/// Integer ratio a/b, or throws UsageError naming `what`.
int integer_ratio(double a, double b, const char* what);

Raster crop(const Raster& r, int rows, int cols);

// ---- container I/O -------------------------------------------------------

/// `path` may name the .hdr, the .bin, or the shared stem.
Raster read_raster(const std::filesystem::path& path);
void write_raster(const Raster& r, const std::filesystem::path& path);
std::filesystem::path raster_stem(const std::filesystem::path& path);

// ---- resampling and aggregation -----------------------------------------

Raster upsample_bicubic(const Raster& r, double target_pixel_size);
Raster downsample_nearest(const Raster& r, double target_pixel_size);

enum class PatchStat { mean, std, count_nonzero, fraction_nonzero };

Raster patch_reduce(const Raster& r, const PatchGrid& grid, PatchStat stat);

/// Per-patch counts of valid and nonzero pixels, exact integers.
struct PatchCounts {
  std::vector<std::uint32_t> valid;
  std::vector<std::uint32_t> nonzero;
};
PatchCounts patch_counts(const Raster& r, const PatchGrid& grid);

}  // namespace lcz
