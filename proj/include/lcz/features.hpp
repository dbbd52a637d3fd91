#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcz/feature_table.hpp"
#include "lcz/raster.hpp"

namespace lcz {

enum class BandRole { blue, green, red, nir, swir };

std::string_view to_string(BandRole role);
BandRole parse_band_role(std::string_view s);

struct NamedBand {
  std::string name;
  Raster raster;
};

/// Co-registered 10 m bands of one acquisition.
struct BandStack {
  std::string acquisition_id;
  std::vector<NamedBand> bands;
  std::map<BandRole, std::string> roles;

  const Raster& band(std::string_view name) const;
  /// Throws DataError("missing band role ...") when unmapped.
  const Raster& role(BandRole r) const;
  bool has_role(BandRole r) const;
  /// All bands share dimensions and pixel size; roles point at existing bands.
  void validate(bool need_swir_blue) const;
};

struct BuildingPoint {
  double x_m = 0.0;  // column direction
  double y_m = 0.0;  // row direction
};
using BuildingPoints = std::vector<BuildingPoint>;

/// Drops points outside [0,extent_x) x [0,extent_y); returns the number dropped.
std::size_t ingest_points(BuildingPoints& points, double extent_x_m, double extent_y_m);
BuildingPoints read_points_csv(const std::filesystem::path& path);
void write_points_csv(const BuildingPoints& points, const std::filesystem::path& path);

// ---- spectral indices ----------------------------------------------------

enum class SpectralIndex { ndvi, ndwi, bsi };

Raster spectral_index(const BandStack& stack, SpectralIndex index);

// ---- morphology ------------------------------------------------------------

/// Grayscale erosion/dilation with a discrete disk {dx^2+dy^2 <= r^2}.
/// Pixels outside the raster and nodata pixels are ignored; nodata stays nodata.
Raster erode_disk(const Raster& r, int radius);
Raster dilate_disk(const Raster& r, int radius);
Raster open_disk(const Raster& r, int radius);
Raster close_disk(const Raster& r, int radius);
/// Maximum over the (2r+1)^2 square window, borders ignored.
Raster box_max(const Raster& r, int radius);

/// Opening and closing per radius, ordered [open r0, close r0, open r1, ...].
std::vector<Raster> morphological_profile(const Raster& ndvi, const std::vector<int>& se_radii);

// ---- texture ---------------------------------------------------------------

struct GlcmOptions {
  int levels = 32;
  std::vector<int> directions_deg{0, 45, 90, 135};
  int offset = 1;
  /// One weight per direction; empty means uniform.
  std::vector<double> direction_weights;
};

struct GlcmStats {
  double contrast = 0.0;
  double correlation = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;
};

/// Patch-local min-max quantization into `levels` bins; nodata -> -1.
std::vector<int> quantize_patch(std::span<const float> values, int levels, float nodata = kNoData);

/// Normalized symmetric co-occurrence matrix (levels x levels, row-major) for
/// one direction. Returns an empty vector when the direction has no valid pairs.
std::vector<double> cooccurrence(std::span<const int> quantized, int width, int height,
                                 int levels, int direction_deg, int offset);

GlcmStats haralick(std::span<const double> p, int levels);

/// Direction-averaged statistics of one patch; nullopt when no valid pairs.
std::optional<GlcmStats> glcm_patch(std::span<const float> values, int width, int height,
                                    const GlcmOptions& opts, float nodata = kNoData);

/// Contrast, correlation, energy, homogeneity rasters at patch resolution.
std::array<Raster, 4> glcm_features(const Raster& band, const GlcmOptions& opts,
                                    double patch_size_m = 100.0);

// ---- OSM-derived -----------------------------------------------------------

/// Building count per patch; a point at x == 100 m falls in patch column 1.
Raster building_density(const BuildingPoints& points, const PatchGrid& grid);

// ---- assembly --------------------------------------------------------------

enum class FeatureMode { satellite_only, stacked_baseline };

struct FeatureOptions {
  std::vector<int> mp_radii{4, 7, 10};
  GlcmOptions glcm;
  BandRole glcm_role = BandRole::nir;
  bool with_bsi = true;
  double patch_size_m = 100.0;
};

struct OsmLayers {
  const Raster* landuse = nullptr;   // 5 m class ids, 0 = unmapped
  const Raster* building = nullptr;  // 5 m binary footprint
  const BuildingPoints* points = nullptr;
};

struct AssembledFeatures {
  FeatureTable table;
  Raster building_density;  // patch resolution; zeros when no points supplied
  PatchGrid grid;
};

/// Column names, in order, that `assemble_features` produces.
std::vector<std::string> feature_inventory(const BandStack& stack, FeatureMode mode,
                                           const FeatureOptions& opts);

AssembledFeatures assemble_features(const BandStack& stack, const OsmLayers& osm,
                                    FeatureMode mode, const FeatureOptions& opts = {});

/// Copies labels 1..17 from a patch-resolution label raster onto table rows.
void attach_labels(FeatureTable& table, const Raster& labels);

}  // namespace lcz
