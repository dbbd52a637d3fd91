#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcz/ccf.hpp"
#include "lcz/labels.hpp"
#include "lcz/raster.hpp"

namespace lcz {

/// Label of the largest vote per pixel (ties -> lowest); all-zero -> 255.
Raster argmax_map(const VotesCube& votes, double pixel_size = 100.0);

enum class FilterMode { median, mode };

/// 3x3 filter over valid labels. Median takes the lower middle value for even
/// counts; mode breaks ties toward the lowest label. Nodata centers stay nodata.
Raster median_filter_3x3(const Raster& map, FilterMode mode = FilterMode::median);

/// Per-pixel most frequent valid label across maps; ties -> lowest; none -> 255.
Raster majority_vote_fusion(std::span<const Raster> maps);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;

  void add(int truth, int predicted, std::uint64_t n = 1);
  std::uint64_t count(int truth, int predicted) const noexcept {
    return counts_[truth - 1][predicted - 1];
  }
  std::uint64_t total() const noexcept;
  std::uint64_t row_sum(int truth) const noexcept;
  std::uint64_t col_sum(int predicted) const noexcept;

  double overall_accuracy() const;
  double chance_agreement() const;
  double kappa() const;
  /// Recall of `label`; nullopt when the label never occurs in the truth.
  std::optional<double> producer_accuracy(int label) const;

  /// Row-normalized percentages; cells below `hide_below` percent print blank.
  std::string format_percentages(double hide_below = 10.0) const;
  /// `oa=`, `kappa=`, `pa_<l>=` lines.
  std::string metrics_text() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::array<std::array<std::uint64_t, kNumLabels>, kNumLabels> counts_{};
};

/// Confusion over pixels where both maps hold a label; throws DataError when none.
ConfusionMatrix evaluate(const Raster& predicted, const Raster& truth);

/// One RGB triple per label, index 0 = label 1.
const std::array<std::array<std::uint8_t, 3>, kNumLabels>& label_palette();
/// Binary PPM (P6) of a label map; nodata renders black.
void write_label_ppm(const Raster& map, const std::filesystem::path& path);
/// Plain-text palette: `label r g b` per line.
void write_palette(const std::filesystem::path& path);

}  // namespace lcz
