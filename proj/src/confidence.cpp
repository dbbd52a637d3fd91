#include "lcz/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "lcz/error.hpp"
#include "lcz/features.hpp"
#include "lcz/labels.hpp"

namespace lcz {
namespace {

bool is_building(const Raster& b, int row, int col) {
  const float v = b.at(row, col);
  return !b.is_nodata(v) && v != 0.0f;
}

int landuse_id(const Raster& lu, int row, int col) {
  const float v = lu.at(row, col);
  return lu.is_nodata(v) ? 0 : static_cast<int>(v);
}

/// Fraction of building pixels per patch, over the full patch area.
std::vector<double> patch_fractions(const Raster& building, const PatchGrid& grid) {
  const PatchCounts c = patch_counts(building, grid);
  const int k = grid.factor();
  const double area = static_cast<double>(k) * k;
  std::vector<double> f(c.nonzero.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = c.nonzero[i] / area;
  return f;
}

std::vector<double> dense_matrix(const LabelCounts& counts, std::size_t n_rows, double alpha) {
  std::vector<double> flat(n_rows * kNumLabels, 0.0);
  for (const auto& [key, row] : counts) {
    if (key < 0 || static_cast<std::size_t>(key) >= n_rows) continue;
    double total = 0.0;
    for (double c : row) total += c;
    const double denom = total + kNumLabels * alpha;
    if (denom <= 0.0) continue;
    for (int l = 0; l < kNumLabels; ++l) flat[key * kNumLabels + l] = (row[l] + alpha) / denom;
  }
  // Rows never observed still carry the smoothing prior.
  if (alpha > 0.0) {
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (counts.count(static_cast<int>(r))) continue;
      for (int l = 0; l < kNumLabels; ++l) flat[r * kNumLabels + l] = 1.0 / kNumLabels;
    }
  }
  return flat;
}

std::string format_corr(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

}  // namespace

// ---- building/landuse co-occurrence --------------------------------------------

void BuildLanduseMatrix::add_scene(const Raster& landuse, const Raster& building) {
  if (!landuse.same_shape(building)) throw UsageError("landuse and building layers differ in shape");
  for (int y = 0; y < landuse.height(); ++y) {
    for (int x = 0; x < landuse.width(); ++x) {
      const int id = landuse_id(landuse, y, x);
      if (id == 0) continue;
      Tally& t = tallies_[id];
      ++t.total;
      t.building += is_building(building, y, x) ? 1 : 0;
    }
  }
}

double BuildLanduseMatrix::p_build(int landuse_id) const noexcept {
  const auto it = tallies_.find(landuse_id);
  if (it == tallies_.end() || it->second.total == 0) return 0.0;
  return static_cast<double>(it->second.building) / static_cast<double>(it->second.total);
}

BuildLanduseMatrix train_build_landuse_matrix(std::span<const LanduseBuildingScene> scenes) {
  if (scenes.empty()) throw UsageError("no scenes for the building-landuse matrix");
  BuildLanduseMatrix m;
  for (const auto& s : scenes) {
    if (!s.landuse || !s.building) throw UsageError("scene lacks landuse or building layer");
    m.add_scene(*s.landuse, *s.building);
  }
  return m;
}

void write_build_landuse(const BuildLanduseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "landuse,building,total,p_build\n";
  char buf[40];
  for (const auto& [id, t] : m.tallies()) {
    std::snprintf(buf, sizeof buf, "%.17g", m.p_build(id));
    out << id << ',' << t.building << ',' << t.total << ',' << buf << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

BuildLanduseMatrix read_build_landuse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  BuildLanduseMatrix m;
  std::string line;
  std::getline(in, line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int id = 0;
    unsigned long long b = 0, t = 0;
    if (std::sscanf(line.c_str(), "%d,%llu,%llu", &id, &b, &t) != 3 || b > t) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": malformed");
    }
    m.set(id, {b, t});
  }
  return m;
}

// ---- per-pixel confidence ----------------------------------------------------------

Raster local_search_confidence(const Raster& landuse, const Raster& building,
                               const BuildLanduseMatrix& m, int radius_px) {
  if (!landuse.same_shape(building)) throw UsageError("landuse and building layers differ in shape");
  if (radius_px < 0) throw UsageError("search radius must be non-negative");
  Raster binary(building.width(), building.height(), building.pixel_size(), 0.0f);
  for (int y = 0; y < building.height(); ++y) {
    for (int x = 0; x < building.width(); ++x) binary.at(y, x) = is_building(building, y, x);
  }
  const Raster near = box_max(binary, radius_px);
  Raster out(landuse.width(), landuse.height(), landuse.pixel_size(), kNoData);
  for (int y = 0; y < landuse.height(); ++y) {
    for (int x = 0; x < landuse.width(); ++x) {
      const int id = landuse_id(landuse, y, x);
      if (id == 0) continue;
      const double flag = near.at(y, x) > 0.0f ? 1.0 : -1.0;
      out.at(y, x) = static_cast<float>(m.p_build(id) * flag);
    }
  }
  return out;
}

Raster surface_fraction_confidence(const Raster& building, double threshold,
                                   double patch_size_m) {
  const PatchGrid grid = PatchGrid::covering(building, patch_size_m);
  const auto frac = patch_fractions(building, grid);
  Raster out(grid.patch_cols, grid.patch_rows, patch_size_m, 0.0f);
  for (std::size_t i = 0; i < frac.size(); ++i) {
    out.values()[i] = frac[i] > threshold ? 1.0f : 0.0f;
  }
  return out;
}

namespace {

std::vector<double> patch_means(const Raster& conf_p1, const Raster& conf_p2,
                                const Raster& landuse, UncoveredPolicy policy) {
  if (!conf_p1.same_shape(landuse)) throw UsageError("conf_p1 and landuse differ in shape");
  const int k = integer_ratio(conf_p2.pixel_size(), conf_p1.pixel_size(), "confidence patch factor");
  if (conf_p1.width() != conf_p2.width() * k || conf_p1.height() != conf_p2.height() * k) {
    throw UsageError("conf_p1 dimensions do not match the patch grid");
  }
  std::vector<double> means(conf_p2.size(), 0.0);
  for (int i = 0; i < conf_p2.height(); ++i) {
    for (int j = 0; j < conf_p2.width(); ++j) {
      const bool dense = conf_p2.at(i, j) == 1.0f;
      double sum = 0.0;
      std::size_t n = 0;
      for (int y = i * k; y < (i + 1) * k; ++y) {
        for (int x = j * k; x < (j + 1) * k; ++x) {
          const float p1 = conf_p1.at(y, x);
          if (landuse_id(landuse, y, x) != 0 && !std::isnan(p1)) {
            sum += p1;
            ++n;
          } else if (dense) {
            sum += 1.0;
            ++n;
          } else if (policy == UncoveredPolicy::zero) {
            ++n;
          }
        }
      }
      means[static_cast<std::size_t>(i) * conf_p2.width() + j] =
          n > 0 ? sum / static_cast<double>(n) : 0.0;
    }
  }
  return means;
}

}  // namespace

Raster combined_confidence(const Raster& conf_p1, const Raster& conf_p2, const Raster& landuse,
                           UncoveredPolicy policy) {
  const auto means = patch_means(conf_p1, conf_p2, landuse, policy);
  Raster out(conf_p2.width(), conf_p2.height(), conf_p2.pixel_size(), 0.0f);
  for (std::size_t i = 0; i < means.size(); ++i) out.values()[i] = static_cast<float>(means[i]);
  return out;
}

Raster combine_and_binarize(const Raster& conf_p1, const Raster& conf_p2, const Raster& landuse,
                            double binarize_threshold, UncoveredPolicy policy) {
  const auto means = patch_means(conf_p1, conf_p2, landuse, policy);
  Raster mask = Raster::make_u8(conf_p2.width(), conf_p2.height(), conf_p2.pixel_size(), 0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    mask.values()[i] = means[i] >= binarize_threshold ? 1.0f : 0.0f;
  }
  return mask;
}

Raster confidence_mask(const Raster& landuse, const Raster& building,
                       const BuildLanduseMatrix& m, const ConfidenceParams& params) {
  const Raster p2 =
      surface_fraction_confidence(building, params.surface_fraction_threshold, params.patch_size_m);
  const int k = integer_ratio(params.patch_size_m, building.pixel_size(), "confidence patch factor");
  const Raster p1 = local_search_confidence(landuse, building, m, params.search_radius_px);
  const int rows = p2.height() * k;
  const int cols = p2.width() * k;
  const bool exact = p1.width() == cols && p1.height() == rows;
  return combine_and_binarize(exact ? p1 : crop(p1, rows, cols), p2,
                              exact ? landuse : crop(landuse, rows, cols),
                              params.binarize_threshold, params.uncovered);
}

// ---- threshold sensitivity -------------------------------------------------------

Raster quasi_truth_mask(const Raster& building, const Raster& labels, double patch_size_m) {
  const PatchGrid grid = PatchGrid::covering(building, patch_size_m);
  const auto frac = patch_fractions(building, grid);
  Raster mask = Raster::make_u8(labels.width(), labels.height(), labels.pixel_size(), 0);
  const int rows = std::min(grid.patch_rows, labels.height());
  const int cols = std::min(grid.patch_cols, labels.width());
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const float v = labels.at(i, j);
      if (labels.is_nodata(v) || !is_label(static_cast<int>(v))) continue;
      const FractionBand& band = surface_fraction_band(static_cast<int>(v));
      const double pct = 100.0 * frac[static_cast<std::size_t>(i) * grid.patch_cols + j];
      if (pct >= band.lo - 1e-9 && pct <= band.hi + 1e-9) mask.at(i, j) = 1.0f;
    }
  }
  return mask;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  // Exact test: rounding in the mean would give a constant vector a tiny variance.
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(a) || constant(b)) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<SensitivityPoint> threshold_sensitivity(std::span<const SensitivityScene> scenes,
                                                    const BuildLanduseMatrix& m,
                                                    const SensitivityOptions& opts) {
  if (scenes.empty()) throw UsageError("no scenes for threshold sensitivity");
  const ConfidenceParams& cp = opts.confidence;

  struct Prepared {
    Raster p1, landuse, quasi;
    const SensitivityScene* scene;
  };
  std::vector<Prepared> prep;
  int bn_max = 0;
  bool any_label = false;
  for (const auto& s : scenes) {
    if (!s.landuse || !s.building || !s.labels || !s.density) {
      throw UsageError("sensitivity scene is incomplete");
    }
    if (!s.labels->same_shape(*s.density)) throw UsageError("label and density grids differ");
    const int k = integer_ratio(cp.patch_size_m, s.building->pixel_size(), "confidence patch factor");
    const PatchGrid grid = PatchGrid::covering(*s.building, cp.patch_size_m);
    if (grid.patch_rows != s.labels->height() || grid.patch_cols != s.labels->width()) {
      throw UsageError("label grid does not match the building layer");
    }
    Prepared p;
    p.scene = &s;
    const Raster full = local_search_confidence(*s.landuse, *s.building, m, cp.search_radius_px);
    const int rows = grid.patch_rows * k, cols = grid.patch_cols * k;
    p.p1 = crop(full, rows, cols);
    p.landuse = crop(*s.landuse, rows, cols);
    p.quasi = quasi_truth_mask(*s.building, *s.labels, cp.patch_size_m);
    for (int i = 0; i < s.labels->height(); ++i) {
      for (int j = 0; j < s.labels->width(); ++j) {
        const float l = s.labels->at(i, j);
        if (s.labels->is_nodata(l) || !is_label(static_cast<int>(l))) continue;
        if (!s.density->valid(i, j)) continue;
        any_label = true;
        bn_max = std::max(bn_max, static_cast<int>(s.density->at(i, j)));
      }
    }
    prep.push_back(std::move(p));
  }
  if (!any_label) throw DataError("no labeled patches for threshold sensitivity");
  const DensityRanges ranges = build_density_ranges(bn_max, opts.gap);
  const std::size_t n_rows = ranges.ranges.size();

  auto matrix_under = [&](auto mask_for) {
    LabelCounts total;
    for (const auto& p : prep) {
      const Raster* mask = mask_for(p);
      BuildingScene bs{p.scene->density, p.scene->labels, mask};
      for (const auto& [key, row] : count_building(bs, ranges)) {
        for (int l = 0; l < kNumLabels; ++l) total[key][l] += row[l];
      }
    }
    return dense_matrix(total, n_rows, opts.alpha);
  };

  const auto quasi = matrix_under([](const Prepared& p) { return &p.quasi; });
  const auto all_pass = matrix_under([](const Prepared&) { return static_cast<const Raster*>(nullptr); });

  std::vector<SensitivityPoint> curve;
  for (double t : opts.thresholds) {
    std::vector<Raster> masks;
    masks.reserve(prep.size());
    for (const auto& p : prep) {
      const Raster p2 = surface_fraction_confidence(*p.scene->building, t, cp.patch_size_m);
      masks.push_back(combine_and_binarize(p.p1, p2, p.landuse, cp.binarize_threshold, cp.uncovered));
    }
    std::size_t idx = 0;
    const auto mt = matrix_under([&](const Prepared&) { return &masks[idx++]; });
    curve.push_back({t, pearson(mt, quasi), pearson(mt, all_pass)});
  }
  return curve;
}

std::optional<Plateau> longest_plateau(std::span<const SensitivityPoint> curve, double tolerance) {
  std::optional<Plateau> best;
  for (std::size_t a = 0; a < curve.size(); ++a) {
    if (!curve[a].corr_quasi_truth) continue;
    double lo = *curve[a].corr_quasi_truth, hi = lo;
    for (std::size_t b = a; b < curve.size(); ++b) {
      if (!curve[b].corr_quasi_truth) break;
      lo = std::min(lo, *curve[b].corr_quasi_truth);
      hi = std::max(hi, *curve[b].corr_quasi_truth);
      if (hi - lo >= tolerance) break;
      const double width = curve[b].threshold - curve[a].threshold;
      if (!best || width > best->hi - best->lo + 1e-12) {
        best = Plateau{curve[a].threshold, curve[b].threshold, hi - lo};
      }
    }
  }
  return best;
}

void write_sensitivity_csv(std::span<const SensitivityPoint> curve,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "threshold,corr_quasi_truth,corr_all_pass\n";
  char buf[40];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.4g", p.threshold);
    out << buf << ',' << format_corr(p.corr_quasi_truth) << ',' << format_corr(p.corr_all_pass)
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace lcz
