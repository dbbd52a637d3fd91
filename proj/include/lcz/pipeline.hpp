#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcz/ccf.hpp"
#include "lcz/confidence.hpp"
#include "lcz/config.hpp"
#include "lcz/features.hpp"
#include "lcz/fusion.hpp"
#include "lcz/postprocess.hpp"
#include "lcz/synth.hpp"

namespace lcz {

/// One city: co-registered acquisitions plus its OSM layers and optional truth.
struct Scene {
  std::string id;
  std::vector<BandStack> acquisitions;
  std::optional<Raster> labels;
  std::optional<Raster> landuse;
  std::optional<Raster> building;
  std::optional<BuildingPoints> points;

  OsmLayers osm() const;
};

Scene load_scene(const SceneManifest& manifest);
Scene scene_from_synthetic(const SyntheticScene& s);

struct Artifacts {
  PipelineConfig config;
  CcfModel model;
  std::optional<WeightMatrix> lu_wn;
  std::optional<WeightMatrix> bu_wn;
  std::optional<DensityRanges> ranges;
  std::optional<BuildLanduseMatrix> build_landuse;
};

/// Pooled per-acquisition feature rows of labeled scenes.
FeatureTable training_table(std::span<const Scene> scenes, const PipelineConfig& config);

Artifacts train_pipeline(std::span<const Scene> scenes, const PipelineConfig& config);

/// Writes the model files, a config snapshot and MANIFEST.txt into `dir`.
std::vector<std::filesystem::path> save_artifacts(const Artifacts& a,
                                                  const std::filesystem::path& dir);
Artifacts load_artifacts(const std::filesystem::path& dir);

struct ClassifyReport {
  double seconds_features = 0.0;
  double seconds_votes = 0.0;
  double seconds_fusion = 0.0;
  double masked_fraction = 0.0;        // patches the building model leaves untouched
  double unclassified_fraction = 0.0;  // nodata pixels in the fused map
  std::string to_text() const;
};

struct ClassifyResult {
  std::vector<std::string> acquisition_ids;
  std::vector<Raster> per_acquisition;  // argmax then 3x3 filter
  Raster fused;
  std::optional<Raster> mask;
  ClassifyReport report;
};

/// Runs the configured framework on every acquisition and fuses the maps.
/// `config` selects fusion mode and baseline mode at classification time.
ClassifyResult classify_scene(const Scene& scene, const Artifacts& artifacts,
                              const PipelineConfig& config);

/// Surface-fraction threshold sweep over labeled scenes with OSM layers.
std::vector<SensitivityPoint> mask_sensitivity(std::span<const Scene> scenes,
                                               const PipelineConfig& config,
                                               std::vector<double> thresholds = {});

/// Truth cropped to the scene's patch grid.
Raster scene_truth(const Scene& scene, double patch_size_m = 100.0);

}  // namespace lcz
