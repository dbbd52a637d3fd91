#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcz/confidence.hpp"
#include "lcz/features.hpp"
#include "lcz/postprocess.hpp"

namespace lcz {

/// Ordered key=value text; '#' starts a comment, blank lines are skipped.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);

enum class FusionMode { none, landuse, building, both };

std::string to_string(FusionMode m);
FusionMode parse_fusion_mode(const std::string& s);
bool uses_landuse(FusionMode m) noexcept;
bool uses_building(FusionMode m) noexcept;

struct PipelineConfig {
  std::size_t n_trees = 20;
  std::size_t min_leaf = 1;
  std::size_t lambda_features = 0;  // 0 = ceil(sqrt(p))
  int max_depth = 0;                // 0 = unlimited
  int gap = 5;
  int search_radius_px = 5;
  double surface_fraction_threshold = 0.10;
  double mask_binarize_threshold = 0.8;
  UncoveredPolicy uncovered_policy = UncoveredPolicy::exclude;
  int glcm_levels = 32;
  std::vector<int> glcm_directions{0, 45, 90, 135};
  int glcm_offset = 1;
  BandRole glcm_role = BandRole::nir;
  std::vector<int> mp_radii{4, 7, 10};
  double laplace_alpha = 1.0;
  std::uint64_t seed = 0;
  FusionMode fusion_mode = FusionMode::both;
  bool baseline_mode = false;
  FilterMode filter_mode = FilterMode::median;
  unsigned threads = 1;

  /// Throws UsageError naming the first out-of-range field.
  void validate() const;
  std::string to_text() const;
  static PipelineConfig from_key_values(const KeyValues& kv);
  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  FeatureOptions feature_options() const;
  CcfParams ccf_params() const;
  ConfidenceParams confidence_params() const;
};

struct AcquisitionEntry {
  std::string id;
  std::string satellite;
  std::string date;
  std::vector<std::pair<std::string, std::filesystem::path>> bands;  // name -> raster
  std::map<BandRole, std::string> roles;
};

struct SceneManifest {
  std::string scene_id;
  std::filesystem::path base_dir;
  std::vector<AcquisitionEntry> acquisitions;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> landuse;
  std::optional<std::filesystem::path> building;
  std::optional<std::filesystem::path> points;

  /// Relative paths resolve against the manifest's directory; every
  /// referenced file must exist.
  static SceneManifest load(const std::filesystem::path& path);
  /// Writes paths relative to the manifest's directory when possible.
  void save(const std::filesystem::path& path) const;
};

}  // namespace lcz
