#include <cmath>
#include <fstream>
#include <sstream>

#include "lcz/error.hpp"
#include "lcz/features.hpp"
#include "lcz/labels.hpp"
#include "lcz/simd/kernels.hpp"

namespace lcz {

std::string_view to_string(BandRole role) {
  switch (role) {
    case BandRole::blue: return "blue";
    case BandRole::green: return "green";
    case BandRole::red: return "red";
    case BandRole::nir: return "nir";
    case BandRole::swir: return "swir";
  }
  return "?";
}

BandRole parse_band_role(std::string_view s) {
  for (BandRole r : {BandRole::blue, BandRole::green, BandRole::red, BandRole::nir, BandRole::swir}) {
    if (to_string(r) == s) return r;
  }
  throw UsageError("unknown band role '" + std::string(s) + "'");
}

const Raster& BandStack::band(std::string_view name) const {
  for (const auto& b : bands) {
    if (b.name == name) return b.raster;
  }
  throw DataError("band '" + std::string(name) + "' not in stack " + acquisition_id);
}

bool BandStack::has_role(BandRole r) const { return roles.count(r) != 0; }

const Raster& BandStack::role(BandRole r) const {
  const auto it = roles.find(r);
  if (it == roles.end()) {
    throw DataError("missing band role '" + std::string(to_string(r)) + "' in " + acquisition_id);
  }
  return band(it->second);
}

void BandStack::validate(bool need_swir_blue) const {
  if (bands.empty()) throw DataError("acquisition " + acquisition_id + " has no bands");
  const Raster& first = bands.front().raster;
  for (const auto& b : bands) {
    if (!b.raster.same_shape(first) || b.raster.pixel_size() != first.pixel_size()) {
      throw DataError("band '" + b.name + "' does not match the stack geometry");
    }
  }
  for (BandRole r : {BandRole::green, BandRole::red, BandRole::nir}) (void)role(r);
  if (need_swir_blue) {
    (void)role(BandRole::swir);
    (void)role(BandRole::blue);
  }
}

std::size_t ingest_points(BuildingPoints& points, double extent_x_m, double extent_y_m) {
  const auto before = points.size();
  std::erase_if(points, [&](const BuildingPoint& p) {
    return !(p.x_m >= 0.0 && p.x_m < extent_x_m && p.y_m >= 0.0 && p.y_m < extent_y_m);
  });
  return before - points.size();
}

BuildingPoints read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("x_m,y_m", 0) != 0) {
    throw DataError("building points CSV must start with header x_m,y_m: " + path.string());
  }
  BuildingPoints pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(line);
      pts.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed point");
    }
  }
  return pts;
}

void write_points_csv(const BuildingPoints& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(12);
  out << "x_m,y_m\n";
  for (const auto& p : points) out << p.x_m << ',' << p.y_m << '\n';
}

Raster spectral_index(const BandStack& stack, SpectralIndex index) {
  const auto& kern = simd::active();
  auto nd = [&](const Raster& a, const Raster& b) {
    if (!a.same_shape(b)) throw DataError("band shapes differ");
    Raster out(a.width(), a.height(), a.pixel_size(), 0.0f);
    // nodata in either band must poison the index.
    std::vector<float> av(a.values().begin(), a.values().end());
    std::vector<float> bv(b.values().begin(), b.values().end());
    for (std::size_t i = 0; i < av.size(); ++i) {
      if (a.is_nodata(av[i]) || b.is_nodata(bv[i])) av[i] = kNoData;
    }
    kern.normalized_difference(av.data(), bv.data(), out.values().data(), av.size());
    return out;
  };
  switch (index) {
    case SpectralIndex::ndvi: return nd(stack.role(BandRole::nir), stack.role(BandRole::red));
    case SpectralIndex::ndwi: return nd(stack.role(BandRole::green), stack.role(BandRole::nir));
    case SpectralIndex::bsi: {
      const Raster& swir = stack.role(BandRole::swir);
      const Raster& red = stack.role(BandRole::red);
      const Raster& nir = stack.role(BandRole::nir);
      const Raster& blue = stack.role(BandRole::blue);
      Raster a(swir.width(), swir.height(), swir.pixel_size(), 0.0f);
      Raster b(swir.width(), swir.height(), swir.pixel_size(), 0.0f);
      auto av = a.values();
      auto bv = b.values();
      for (std::size_t i = 0; i < av.size(); ++i) {
        const float s = swir.values()[i], r = red.values()[i];
        const float n = nir.values()[i], bl = blue.values()[i];
        const bool bad = swir.is_nodata(s) || red.is_nodata(r) || nir.is_nodata(n) || blue.is_nodata(bl);
        av[i] = bad ? kNoData : s + r;
        bv[i] = bad ? kNoData : n + bl;
      }
      return nd(a, b);
    }
  }
  throw UsageError("unknown spectral index");
}

Raster building_density(const BuildingPoints& points, const PatchGrid& grid) {
  Raster out(grid.patch_cols, grid.patch_rows, grid.patch_size_m, 0.0f);
  for (const auto& p : points) {
    const auto col = static_cast<long>(std::floor(p.x_m / grid.patch_size_m));
    const auto row = static_cast<long>(std::floor(p.y_m / grid.patch_size_m));
    if (col < 0 || row < 0 || col >= grid.patch_cols || row >= grid.patch_rows) continue;
    out.at(static_cast<int>(row), static_cast<int>(col)) += 1.0f;
  }
  return out;
}

std::vector<std::string> feature_inventory(const BandStack& stack, FeatureMode mode,
                                           const FeatureOptions& opts) {
  std::vector<std::string> names;
  for (const auto& b : stack.bands) names.push_back("mean_" + b.name);
  for (const auto& b : stack.bands) names.push_back("std_" + b.name);
  std::vector<std::string> idx{"ndvi", "ndwi"};
  if (opts.with_bsi) idx.push_back("bsi");
  for (const auto& i : idx) names.push_back("mean_" + i);
  for (const auto& i : idx) names.push_back("std_" + i);
  for (const char* g : {"glcm_contrast", "glcm_correlation", "glcm_energy", "glcm_homogeneity"}) {
    names.emplace_back(g);
  }
  for (int r : opts.mp_radii) {
    names.push_back("mp_open_r" + std::to_string(r));
    names.push_back("mp_close_r" + std::to_string(r));
  }
  if (mode == FeatureMode::stacked_baseline) {
    names.emplace_back("building_density");
    names.emplace_back("building");
    names.emplace_back("landuse");
  }
  return names;
}

namespace {

void check_extent(const Raster& osm, const Raster& ref, const char* what) {
  const double tol = 1e-6 * std::max(ref.extent_x_m(), ref.extent_y_m());
  if (std::abs(osm.extent_x_m() - ref.extent_x_m()) > tol ||
      std::abs(osm.extent_y_m() - ref.extent_y_m()) > tol) {
    throw DataError(std::string("extent mismatch: ") + what + " does not cover the band extent");
  }
}

Raster crop_to(const Raster& r, const PatchGrid& grid) {
  const PatchGrid g = grid.with_source(r.pixel_size());
  const int k = g.factor();
  return crop(r, g.patch_rows * k, g.patch_cols * k);
}

}  // namespace

AssembledFeatures assemble_features(const BandStack& stack, const OsmLayers& osm,
                                    FeatureMode mode, const FeatureOptions& opts) {
  stack.validate(opts.with_bsi);
  const Raster& ref = stack.bands.front().raster;
  const PatchGrid grid = PatchGrid::covering(ref, opts.patch_size_m);
  const PatchGrid band_grid = grid.with_source(ref.pixel_size());

  std::vector<Raster> columns;  // patch-resolution rasters in inventory order
  auto reduce = [&](const Raster& src, PatchStat stat) {
    return patch_reduce(crop_to(src, grid), band_grid, stat);
  };
  for (const auto& b : stack.bands) columns.push_back(reduce(b.raster, PatchStat::mean));
  for (const auto& b : stack.bands) columns.push_back(reduce(b.raster, PatchStat::std));

  std::vector<Raster> indices;
  indices.push_back(spectral_index(stack, SpectralIndex::ndvi));
  indices.push_back(spectral_index(stack, SpectralIndex::ndwi));
  if (opts.with_bsi) indices.push_back(spectral_index(stack, SpectralIndex::bsi));
  for (const auto& ix : indices) columns.push_back(reduce(ix, PatchStat::mean));
  for (const auto& ix : indices) columns.push_back(reduce(ix, PatchStat::std));

  auto glcm = glcm_features(crop_to(stack.role(opts.glcm_role), grid), opts.glcm, opts.patch_size_m);
  for (auto& g : glcm) columns.push_back(std::move(g));

  for (const auto& mp : morphological_profile(indices.front(), opts.mp_radii)) {
    columns.push_back(reduce(mp, PatchStat::mean));
  }

  AssembledFeatures out;
  out.grid = grid;
  if (osm.points != nullptr) {
    BuildingPoints pts = *osm.points;
    ingest_points(pts, ref.extent_x_m(), ref.extent_y_m());
    out.building_density = building_density(pts, grid);
  } else {
    out.building_density = Raster(grid.patch_cols, grid.patch_rows, grid.patch_size_m, 0.0f);
  }

  if (mode == FeatureMode::stacked_baseline) {
    if (osm.landuse == nullptr || osm.building == nullptr) {
      throw DataError("stacked baseline needs landuse and building layers");
    }
    check_extent(*osm.landuse, ref, "landuse layer");
    check_extent(*osm.building, ref, "building layer");
    columns.push_back(out.building_density);
    columns.push_back(downsample_nearest(crop_to(*osm.building, grid), opts.patch_size_m));
    columns.push_back(downsample_nearest(crop_to(*osm.landuse, grid), opts.patch_size_m));
  } else {
    if (osm.landuse != nullptr) check_extent(*osm.landuse, ref, "landuse layer");
    if (osm.building != nullptr) check_extent(*osm.building, ref, "building layer");
  }

  auto names = feature_inventory(stack, mode, opts);
  if (names.size() != columns.size()) throw NumericalError("feature inventory mismatch");
  out.table = FeatureTable(std::move(names));
  std::vector<double> row(columns.size());
  for (int i = 0; i < grid.patch_rows; ++i) {
    for (int j = 0; j < grid.patch_cols; ++j) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        const float v = columns[c].at(i, j);
        row[c] = columns[c].is_nodata(v) ? std::nan("") : static_cast<double>(v);
      }
      out.table.add_row({i, j}, row);
    }
  }
  return out;
}

void attach_labels(FeatureTable& table, const Raster& labels) {
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const auto c = table.coord(r);
    if (c.i >= labels.height() || c.j >= labels.width()) {
      throw DataError("label raster smaller than the patch grid");
    }
    const float v = labels.at(c.i, c.j);
    const int l = std::isnan(v) ? 0 : static_cast<int>(std::lround(v));
    table.set_label(r, is_label(l) ? l : 0);
  }
}

}  // namespace lcz
