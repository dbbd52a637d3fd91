#include "lcz/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lcz/error.hpp"

namespace lcz {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

FeatureMode feature_mode(const PipelineConfig& c) {
  return c.baseline_mode ? FeatureMode::stacked_baseline : FeatureMode::satellite_only;
}

PatchGrid scene_grid(const Scene& s, double patch_size_m = 100.0) {
  if (s.acquisitions.empty() || s.acquisitions.front().bands.empty()) {
    throw DataError("scene " + s.id + " has no acquisitions");
  }
  return PatchGrid::covering(s.acquisitions.front().bands.front().raster, patch_size_m);
}

/// OSM layer cropped to the patch grid at its own resolution.
Raster crop_osm(const Raster& r, const PatchGrid& grid) {
  const int k = integer_ratio(grid.patch_size_m, r.pixel_size(), "OSM patch factor");
  if (r.height() < grid.patch_rows * k || r.width() < grid.patch_cols * k) {
    throw DataError("extent mismatch: OSM layer smaller than the patch grid");
  }
  return crop(r, grid.patch_rows * k, grid.patch_cols * k);
}

Raster scene_density(const Scene& s, const PatchGrid& grid) {
  BuildingPoints pts = s.points ? *s.points : BuildingPoints{};
  ingest_points(pts, grid.patch_cols * grid.patch_size_m, grid.patch_rows * grid.patch_size_m);
  return building_density(pts, grid);
}

void require_osm(const Scene& s, bool landuse, bool building) {
  if (landuse && !s.landuse) throw DataError("scene " + s.id + " lacks the landuse layer");
  if (building && (!s.landuse || !s.building)) {
    throw DataError("scene " + s.id + " lacks landuse/building layers for the building model");
  }
}

Raster read_checked(const std::filesystem::path& p) {
  try {
    return read_raster(p);
  } catch (const Error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

}  // namespace

OsmLayers Scene::osm() const {
  OsmLayers o;
  o.landuse = landuse ? &*landuse : nullptr;
  o.building = building ? &*building : nullptr;
  o.points = points ? &*points : nullptr;
  return o;
}

Scene load_scene(const SceneManifest& m) {
  Scene s;
  s.id = m.scene_id;
  for (const auto& a : m.acquisitions) {
    BandStack stack;
    stack.acquisition_id = a.id;
    stack.roles = a.roles;
    for (const auto& [name, path] : a.bands) stack.bands.push_back({name, read_checked(path)});
    s.acquisitions.push_back(std::move(stack));
  }
  if (m.labels) s.labels = read_checked(*m.labels);
  if (m.landuse) s.landuse = read_checked(*m.landuse);
  if (m.building) s.building = read_checked(*m.building);
  if (m.points) s.points = read_points_csv(*m.points);
  return s;
}

Scene scene_from_synthetic(const SyntheticScene& syn) {
  Scene s;
  s.id = syn.scene_id;
  for (const auto& a : syn.acquisitions) s.acquisitions.push_back(a.stack);
  s.labels = syn.labels;
  s.landuse = syn.landuse;
  s.building = syn.building;
  s.points = syn.points;
  return s;
}

Raster scene_truth(const Scene& scene, double patch_size_m) {
  if (!scene.labels) throw UsageError("scene " + scene.id + " has no labels");
  const PatchGrid grid = scene_grid(scene, patch_size_m);
  if (scene.labels->height() < grid.patch_rows || scene.labels->width() < grid.patch_cols) {
    throw DataError("label raster smaller than the patch grid");
  }
  return crop(*scene.labels, grid.patch_rows, grid.patch_cols);
}

FeatureTable training_table(std::span<const Scene> scenes, const PipelineConfig& config) {
  const FeatureOptions opts = config.feature_options();
  FeatureTable table;
  for (const auto& s : scenes) {
    if (!s.labels) throw UsageError("training scene " + s.id + " has no labels");
    for (const auto& stack : s.acquisitions) {
      auto f = assemble_features(stack, s.osm(), feature_mode(config), opts);
      attach_labels(f.table, *s.labels);
      table.append(f.table);
    }
  }
  if (trainable_rows(table).empty()) throw DataError("training feature table has no labeled rows");
  return table;
}

Artifacts train_pipeline(std::span<const Scene> scenes, const PipelineConfig& config) {
  config.validate();
  if (scenes.empty()) throw UsageError("no training scenes");
  Artifacts a;
  a.config = config;
  a.model = train_ccf(training_table(scenes, config), config.ccf_params());
  if (config.baseline_mode) return a;

  if (uses_landuse(config.fusion_mode)) {
    std::vector<Raster> truths;
    for (const auto& s : scenes) {
      require_osm(s, true, false);
      truths.push_back(scene_truth(s));
    }
    std::vector<LanduseScene> lu;
    for (std::size_t i = 0; i < scenes.size(); ++i) lu.push_back({&*scenes[i].landuse, &truths[i]});
    a.lu_wn = train_landuse_matrix(lu, config.laplace_alpha);
  }

  if (uses_building(config.fusion_mode)) {
    std::vector<LanduseBuildingScene> lb;
    for (const auto& s : scenes) {
      require_osm(s, false, true);
      lb.push_back({&*s.landuse, &*s.building});
    }
    a.build_landuse = train_build_landuse_matrix(lb);

    std::vector<Raster> truths, densities, masks;
    int bn_max = 0;
    for (const auto& s : scenes) {
      const PatchGrid grid = scene_grid(s);
      truths.push_back(scene_truth(s));
      densities.push_back(scene_density(s, grid));
      masks.push_back(confidence_mask(crop_osm(*s.landuse, grid), crop_osm(*s.building, grid),
                                      *a.build_landuse, config.confidence_params()));
      const Raster& t = truths.back();
      for (std::size_t i = 0; i < t.size(); ++i) {
        const float l = t.values()[i];
        if (!t.is_nodata(l) && is_label(static_cast<int>(l))) {
          bn_max = std::max(bn_max, static_cast<int>(densities.back().values()[i]));
        }
      }
    }
    a.ranges = build_density_ranges(bn_max, config.gap);
    std::vector<BuildingScene> bs;
    for (std::size_t i = 0; i < scenes.size(); ++i) bs.push_back({&densities[i], &truths[i], &masks[i]});
    a.bu_wn = train_building_matrix(bs, *a.ranges, config.laplace_alpha);
  }
  return a;
}

std::vector<std::filesystem::path> save_artifacts(const Artifacts& a,
                                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  write_ccf(a.model, dir / "ccf_model.txt");
  files.push_back(dir / "ccf_model.txt");
  if (a.lu_wn) {
    write_weight_matrix(*a.lu_wn, dir / "lu_wn.csv");
    files.push_back(dir / "lu_wn.csv");
  }
  if (a.bu_wn && a.ranges) {
    write_weight_matrix(*a.bu_wn, dir / "bu_wn.csv", &*a.ranges);
    files.push_back(dir / "bu_wn.csv");
  }
  if (a.build_landuse) {
    write_build_landuse(*a.build_landuse, dir / "build_landuse.csv");
    files.push_back(dir / "build_landuse.csv");
  }
  a.config.save(dir / "config.txt");
  files.push_back(dir / "config.txt");
  std::ofstream idx(dir / "MANIFEST.txt");
  for (const auto& f : files) idx << f.filename().string() << '\n';
  if (!idx) throw DataError("cannot write " + (dir / "MANIFEST.txt").string());
  return files;
}

Artifacts load_artifacts(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "ccf_model.txt")) {
    throw DataError("missing file: " + (dir / "ccf_model.txt").string());
  }
  Artifacts a;
  a.config = std::filesystem::exists(dir / "config.txt") ? PipelineConfig::load(dir / "config.txt")
                                                         : PipelineConfig{};
  a.model = read_ccf(dir / "ccf_model.txt");
  if (std::filesystem::exists(dir / "lu_wn.csv")) a.lu_wn = read_weight_matrix(dir / "lu_wn.csv").matrix;
  if (std::filesystem::exists(dir / "bu_wn.csv")) {
    auto stored = read_weight_matrix(dir / "bu_wn.csv");
    if (!stored.ranges) throw DataError("bu_wn.csv lacks the density-range header");
    a.bu_wn = std::move(stored.matrix);
    a.ranges = stored.ranges;
  }
  if (std::filesystem::exists(dir / "build_landuse.csv")) {
    a.build_landuse = read_build_landuse(dir / "build_landuse.csv");
  }
  return a;
}

std::string ClassifyReport::to_text() const {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "seconds_features=%.3f\nseconds_votes=%.3f\nseconds_fusion=%.3f\n"
                "masked_patch_fraction=%.6f\nunclassified_fraction=%.6f\n",
                seconds_features, seconds_votes, seconds_fusion, masked_fraction,
                unclassified_fraction);
  return buf;
}

ClassifyResult classify_scene(const Scene& scene, const Artifacts& artifacts,
                              const PipelineConfig& config) {
  config.validate();
  const bool landuse_on = !config.baseline_mode && uses_landuse(config.fusion_mode);
  const bool building_on = !config.baseline_mode && uses_building(config.fusion_mode);
  if (landuse_on && !artifacts.lu_wn) throw UsageError("artifacts lack the landuse weight matrix");
  if (building_on && (!artifacts.bu_wn || !artifacts.ranges || !artifacts.build_landuse)) {
    throw UsageError("artifacts lack the building weight matrix");
  }
  require_osm(scene, landuse_on, building_on);

  ClassifyResult out;
  const PatchGrid grid = scene_grid(scene);
  std::optional<Raster> landuse;
  if (landuse_on || building_on) landuse = crop_osm(*scene.landuse, grid);

  Raster density;
  auto t0 = Clock::now();
  if (building_on) {
    // Co-occurrence statistics pool training and this scene's layers.
    BuildLanduseMatrix m = *artifacts.build_landuse;
    const Raster building = crop_osm(*scene.building, grid);
    m.add_scene(*landuse, building);
    out.mask = confidence_mask(*landuse, building, m, config.confidence_params());
    density = scene_density(scene, grid);
    std::size_t masked = 0;
    for (float v : out.mask->values()) masked += v != 1.0f;
    out.report.masked_fraction = static_cast<double>(masked) / static_cast<double>(out.mask->size());
  }
  out.report.seconds_fusion += seconds_since(t0);

  const FeatureOptions opts = config.feature_options();
  for (const auto& stack : scene.acquisitions) {
    t0 = Clock::now();
    auto f = assemble_features(stack, scene.osm(), feature_mode(config), opts);
    if (f.grid.patch_rows != grid.patch_rows || f.grid.patch_cols != grid.patch_cols) {
      throw DataError("acquisition " + stack.acquisition_id + " does not share the scene grid");
    }
    out.report.seconds_features += seconds_since(t0);

    t0 = Clock::now();
    VotesCube votes = predict_votes(artifacts.model, f.table, grid.patch_rows, grid.patch_cols);
    out.report.seconds_votes += seconds_since(t0);

    t0 = Clock::now();
    if (landuse_on) votes = apply_landuse_fusion(votes, *landuse, *artifacts.lu_wn);
    if (building_on) {
      votes = apply_building_fusion(votes, density, *artifacts.bu_wn, *artifacts.ranges, &*out.mask);
    }
    out.per_acquisition.push_back(median_filter_3x3(argmax_map(votes), config.filter_mode));
    out.acquisition_ids.push_back(stack.acquisition_id);
    out.report.seconds_fusion += seconds_since(t0);
  }
  out.fused = majority_vote_fusion(out.per_acquisition);
  std::size_t missing = 0;
  for (float v : out.fused.values()) missing += out.fused.is_nodata(v);
  out.report.unclassified_fraction = static_cast<double>(missing) / static_cast<double>(out.fused.size());
  return out;
}

std::vector<SensitivityPoint> mask_sensitivity(std::span<const Scene> scenes,
                                               const PipelineConfig& config,
                                               std::vector<double> thresholds) {
  std::vector<Raster> truth, density, landuse, building;
  truth.reserve(scenes.size());
  density.reserve(scenes.size());
  landuse.reserve(scenes.size());
  building.reserve(scenes.size());
  for (const auto& s : scenes) {
    require_osm(s, true, true);
    const PatchGrid grid = scene_grid(s);
    truth.push_back(scene_truth(s));
    density.push_back(scene_density(s, grid));
    landuse.push_back(crop_osm(*s.landuse, grid));
    building.push_back(crop_osm(*s.building, grid));
  }
  std::vector<LanduseBuildingScene> lb;
  std::vector<SensitivityScene> ss;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    lb.push_back({&landuse[i], &building[i]});
    ss.push_back({&landuse[i], &building[i], &truth[i], &density[i]});
  }
  SensitivityOptions opts;
  if (!thresholds.empty()) opts.thresholds = std::move(thresholds);
  opts.confidence = config.confidence_params();
  opts.gap = config.gap;
  opts.alpha = config.laplace_alpha;
  return threshold_sensitivity(ss, train_build_landuse_matrix(lb), opts);
}

}  // namespace lcz
