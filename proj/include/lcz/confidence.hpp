#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lcz/fusion.hpp"
#include "lcz/raster.hpp"

namespace lcz {

/// Per landuse class: how many 5 m pixels carry a building footprint.
class BuildLanduseMatrix {
 public:
  struct Tally {
    std::uint64_t building = 0;
    std::uint64_t total = 0;
  };

  /// Accumulates one co-registered scene; landuse 0 and nodata are skipped.
  void add_scene(const Raster& landuse, const Raster& building);
  void set(int landuse_id, Tally t) { tallies_[landuse_id] = t; }

  /// p(build=1 | landuse=id); 0 for classes never observed.
  double p_build(int landuse_id) const noexcept;
  const std::map<int, Tally>& tallies() const noexcept { return tallies_; }
  bool empty() const noexcept { return tallies_.empty(); }

 private:
  std::map<int, Tally> tallies_;
};

struct LanduseBuildingScene {
  const Raster* landuse = nullptr;
  const Raster* building = nullptr;
};

BuildLanduseMatrix train_build_landuse_matrix(std::span<const LanduseBuildingScene> scenes);

void write_build_landuse(const BuildLanduseMatrix& m, const std::filesystem::path& path);
BuildLanduseMatrix read_build_landuse(const std::filesystem::path& path);

/// p(build|lu) times +1 when a building pixel lies within the square window of
/// `radius_px`, else -1. NaN where landuse is 0 or nodata.
Raster local_search_confidence(const Raster& landuse, const Raster& building,
                               const BuildLanduseMatrix& m, int radius_px = 5);

/// 1 where the patch building fraction strictly exceeds `threshold`, else 0.
Raster surface_fraction_confidence(const Raster& building, double threshold = 0.10,
                                   double patch_size_m = 100.0);

/// Treatment of 5 m pixels with landuse 0 in patches whose fraction test failed.
enum class UncoveredPolicy {
  zero,     // contribute 0 to the patch mean
  exclude,  // left out of the patch mean; a patch with nothing left scores 0
};

/// Patch mean of the combined 5 m confidence.
Raster combined_confidence(const Raster& conf_p1, const Raster& conf_p2, const Raster& landuse,
                           UncoveredPolicy policy = UncoveredPolicy::exclude);

/// u8 mask: 1 where the combined patch mean reaches `binarize_threshold`.
Raster combine_and_binarize(const Raster& conf_p1, const Raster& conf_p2, const Raster& landuse,
                            double binarize_threshold = 0.8,
                            UncoveredPolicy policy = UncoveredPolicy::exclude);

struct ConfidenceParams {
  int search_radius_px = 5;
  double surface_fraction_threshold = 0.10;
  double binarize_threshold = 0.8;
  UncoveredPolicy uncovered = UncoveredPolicy::exclude;
  double patch_size_m = 100.0;
};

Raster confidence_mask(const Raster& landuse, const Raster& building,
                       const BuildLanduseMatrix& m, const ConfidenceParams& params = {});

// ---- threshold sensitivity -----------------------------------------------------

struct SensitivityScene {
  const Raster* landuse = nullptr;   // 5 m
  const Raster* building = nullptr;  // 5 m
  const Raster* labels = nullptr;    // patch grid
  const Raster* density = nullptr;   // patch grid
};

struct SensitivityPoint {
  double threshold = 0.0;
  std::optional<double> corr_quasi_truth;
  std::optional<double> corr_all_pass;
};

struct SensitivityOptions {
  std::vector<double> thresholds{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  ConfidenceParams confidence;
  int gap = 5;
  double alpha = 1.0;
};

/// Building-matrix agreement across surface-fraction thresholds, against the
/// matrix masked by each label's fraction band and the unmasked matrix.
std::vector<SensitivityPoint> threshold_sensitivity(std::span<const SensitivityScene> scenes,
                                                    const BuildLanduseMatrix& m,
                                                    const SensitivityOptions& opts = {});

/// Patch kept iff the observed building fraction lies in its label's band.
Raster quasi_truth_mask(const Raster& building, const Raster& labels,
                        double patch_size_m = 100.0);

/// Pearson correlation of two equally sized vectors; nullopt when either is constant.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct Plateau {
  double lo = 0.0;
  double hi = 0.0;
  double variation = 0.0;  // max - min of the quasi-truth correlation over [lo, hi]
};

/// Widest contiguous threshold run whose quasi-truth correlation varies < tolerance.
std::optional<Plateau> longest_plateau(std::span<const SensitivityPoint> curve,
                                       double tolerance = 0.05);

void write_sensitivity_csv(std::span<const SensitivityPoint> curve,
                           const std::filesystem::path& path);

}  // namespace lcz
