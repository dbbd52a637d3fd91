#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lcz/ccf.hpp"
#include "lcz/labels.hpp"
#include "lcz/raster.hpp"

namespace lcz {

using LabelRow = std::array<double, kNumLabels>;

/// Raw co-occurrence counts keyed by landuse class or density-range index.
using LabelCounts = std::map<int, LabelRow>;

/// Row-stochastic P(label | key) table.
struct WeightMatrix {
  std::vector<int> row_keys;  // ascending
  std::vector<LabelRow> probs;
  double laplace_alpha = 1.0;

  std::size_t rows() const noexcept { return row_keys.size(); }
  /// Row for `key`, or nullptr when the key was never trained.
  const LabelRow* find(int key) const noexcept;
  /// Row for `key`, falling back to the uniform 1/17 row.
  const LabelRow& row_or_uniform(int key) const noexcept;
};

/// (count + alpha) / (row total + 17 alpha). Keys with zero raw count are
/// dropped when alpha is 0.
WeightMatrix normalize_counts(const LabelCounts& counts, double alpha);

// ---- landuse model -----------------------------------------------------------

struct LanduseScene {
  const Raster* landuse = nullptr;  // 5 m class ids, 0 = unmapped
  const Raster* labels = nullptr;   // patch resolution, 1..17 or nodata
};

/// Counts 5 m landuse pixels (id != 0) inside labeled patches.
LabelCounts count_landuse(const LanduseScene& scene, double patch_size_m = 100.0);
WeightMatrix train_landuse_matrix(std::span<const LanduseScene> scenes, double alpha = 1.0,
                                  double patch_size_m = 100.0);

/// Weights each patch's votes by the summed rows of its nonzero landuse pixels.
/// Patches without landuse pass through; unknown ids use the uniform row.
VotesCube apply_landuse_fusion(const VotesCube& votes, const Raster& landuse,
                               const WeightMatrix& w, double patch_size_m = 100.0);

// ---- building model ----------------------------------------------------------

struct DensityRanges {
  int gap = 5;
  int bn_max = 0;
  std::vector<std::array<int, 2>> ranges;  // inclusive [lo, hi], contiguous

  /// Range index of a density; values above the last range clamp to it.
  std::size_t index(double density) const noexcept;
};

DensityRanges build_density_ranges(int bn_max, int gap = 5);

struct BuildingScene {
  const Raster* density = nullptr;  // building count per patch
  const Raster* labels = nullptr;
  const Raster* mask = nullptr;     // optional; 0 excludes the patch
};

LabelCounts count_building(const BuildingScene& scene, const DensityRanges& ranges);
WeightMatrix train_building_matrix(std::span<const BuildingScene> scenes,
                                   const DensityRanges& ranges, double alpha = 1.0);

/// Elementwise product of each pixel's density-range row with its votes.
/// Pixels with mask 0 pass through; a null mask fuses everywhere.
VotesCube apply_building_fusion(const VotesCube& votes, const Raster& density,
                                const WeightMatrix& w, const DensityRanges& ranges,
                                const Raster* mask = nullptr);

// ---- serialization -------------------------------------------------------------

struct StoredWeights {
  WeightMatrix matrix;
  std::optional<DensityRanges> ranges;
};

void write_weight_matrix(const WeightMatrix& w, const std::filesystem::path& path,
                         const DensityRanges* ranges = nullptr);
StoredWeights read_weight_matrix(const std::filesystem::path& path);

}  // namespace lcz
