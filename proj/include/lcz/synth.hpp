#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lcz/config.hpp"
#include "lcz/features.hpp"
#include "lcz/raster.hpp"

namespace lcz {

/// Endmember-mixing description of a synthetic city. Every knob is read from
/// the spec file; nothing about the class signatures is built in.
struct SynthSpec {
  std::vector<std::string> bands;
  std::map<BandRole, std::string> roles;
  int patch_cols = 0;  // 0 = near-square grid
  std::vector<std::pair<int, int>> label_counts;  // label -> patches

  std::uint64_t archetype_seed = 1;
  std::map<std::string, std::vector<double>> endmembers;  // vegetation, impervious, soil, water, roof
  std::map<int, std::array<double, 4>> ground;            // veg, imp, soil, water per label
  std::map<int, std::array<int, 2>> buildings;            // building count range per label
  std::map<int, std::array<double, 2>> fraction;          // percent; defaults to the LCZ band
  double archetype_jitter = 0.0;
  double patch_noise = 0.05;
  double pixel_noise = 0.01;
  double city_gain_sd = 0.0;
  double city_offset_sd = 0.0;

  std::vector<double> acquisition_severity{0.0};
  double acq_gain_sd = 0.0;
  double acq_offset_sd = 0.0;
  double acq_haze = 0.0;
  double acq_veg_sd = 0.0;
  double acq_noise = 0.0;

  double gap_fraction = 0.0;
  double landuse_coverage_built = 0.9;
  double landuse_coverage_natural = 0.8;
  double landuse_building_coverage = 0.9;
  std::map<int, std::vector<std::pair<int, double>>> landuse;  // label -> (id, prob)

  static SynthSpec from_key_values(const KeyValues& kv);
  static SynthSpec load(const std::filesystem::path& path);
  void validate() const;
  int total_patches() const;
};

struct GapRect {
  int row0 = 0;  // 5 m pixel coordinates
  int col0 = 0;
  int rows = 0;
  int cols = 0;
  int patch_i = 0;
  int patch_j = 0;
};

struct SyntheticAcquisition {
  std::string id;
  double severity = 0.0;
  BandStack stack;
};

struct SyntheticScene {
  std::string scene_id;
  Raster labels;         // 100 m, u8, 255 = unlabeled
  Raster landuse;        // 5 m, u8 class ids, 0 = none
  Raster building;       // 5 m, u8, as mapped (gaps applied)
  Raster building_true;  // 5 m, before gap injection
  BuildingPoints points; // centroids of mapped buildings
  std::vector<GapRect> gaps;
  std::vector<SyntheticAcquisition> acquisitions;
};

SyntheticScene generate_scene(const SynthSpec& spec, std::uint64_t seed,
                              const std::string& scene_id = "synthetic");

/// Writes rasters, points, gaps.csv and manifest.txt; returns the manifest path.
std::filesystem::path write_synthetic_scene(const SyntheticScene& scene,
                                            const std::filesystem::path& dir);

}  // namespace lcz
