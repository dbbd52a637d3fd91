#include "lcz/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "lcz/error.hpp"

namespace lcz {
namespace {

constexpr LabelRow uniform_row() {
  LabelRow r{};
  for (double& v : r) v = 1.0 / kNumLabels;
  return r;
}

constexpr LabelRow kUniform = uniform_row();

int label_at(const Raster& labels, int i, int j) {
  const float v = labels.at(i, j);
  if (labels.is_nodata(v)) return 0;
  const int l = static_cast<int>(v);
  return is_label(l) && static_cast<float>(l) == v ? l : 0;
}

int landuse_id(const Raster& landuse, int row, int col) {
  const float v = landuse.at(row, col);
  if (landuse.is_nodata(v)) return 0;
  return static_cast<int>(v);
}

void check_cube_shape(const VotesCube& votes, const Raster& r, const char* what) {
  if (r.width() != votes.cols() || r.height() != votes.rows()) {
    throw UsageError(std::string(what) + " dimensions do not match the votes grid");
  }
}

}  // namespace

const LabelRow* WeightMatrix::find(int key) const noexcept {
  const auto it = std::lower_bound(row_keys.begin(), row_keys.end(), key);
  if (it == row_keys.end() || *it != key) return nullptr;
  return &probs[static_cast<std::size_t>(it - row_keys.begin())];
}

const LabelRow& WeightMatrix::row_or_uniform(int key) const noexcept {
  const LabelRow* r = find(key);
  return r ? *r : kUniform;
}

WeightMatrix normalize_counts(const LabelCounts& counts, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw UsageError("laplace alpha must be >= 0");
  WeightMatrix w;
  w.laplace_alpha = alpha;
  for (const auto& [key, row] : counts) {
    double total = 0.0;
    for (double c : row) total += c;
    if (total <= 0.0 && alpha == 0.0) continue;
    const double denom = total + kNumLabels * alpha;
    LabelRow p{};
    for (int l = 0; l < kNumLabels; ++l) p[l] = (row[l] + alpha) / denom;
    w.row_keys.push_back(key);
    w.probs.push_back(p);
  }
  return w;
}

// ---- landuse -------------------------------------------------------------------

LabelCounts count_landuse(const LanduseScene& scene, double patch_size_m) {
  if (!scene.landuse || !scene.labels) throw UsageError("landuse scene is incomplete");
  const Raster& lu = *scene.landuse;
  const Raster& labels = *scene.labels;
  const int k = integer_ratio(patch_size_m, lu.pixel_size(), "landuse patch factor");
  const int rows = std::min(labels.height(), lu.height() / k);
  const int cols = std::min(labels.width(), lu.width() / k);
  LabelCounts counts;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int label = label_at(labels, i, j);
      if (label == 0) continue;
      for (int y = i * k; y < (i + 1) * k; ++y) {
        for (int x = j * k; x < (j + 1) * k; ++x) {
          const int id = landuse_id(lu, y, x);
          if (id != 0) counts[id][label - 1] += 1.0;
        }
      }
    }
  }
  return counts;
}

WeightMatrix train_landuse_matrix(std::span<const LanduseScene> scenes, double alpha,
                                  double patch_size_m) {
  if (scenes.empty()) throw UsageError("no training scenes");
  LabelCounts total;
  for (const auto& s : scenes) {
    for (const auto& [key, row] : count_landuse(s, patch_size_m)) {
      for (int l = 0; l < kNumLabels; ++l) total[key][l] += row[l];
    }
  }
  if (total.empty()) throw DataError("no nonzero landuse pixels overlap labeled patches");
  return normalize_counts(total, alpha);
}

VotesCube apply_landuse_fusion(const VotesCube& votes, const Raster& landuse,
                               const WeightMatrix& w, double patch_size_m) {
  const int k = integer_ratio(patch_size_m, landuse.pixel_size(), "landuse patch factor");
  if (landuse.width() != votes.cols() * k || landuse.height() != votes.rows() * k) {
    throw UsageError("landuse dimensions do not match the votes grid");
  }
  VotesCube out = votes;
  for (int i = 0; i < votes.rows(); ++i) {
    for (int j = 0; j < votes.cols(); ++j) {
      LabelRow weight{};
      bool any = false;
      for (int y = i * k; y < (i + 1) * k; ++y) {
        for (int x = j * k; x < (j + 1) * k; ++x) {
          const int id = landuse_id(landuse, y, x);
          if (id == 0) continue;
          const LabelRow& r = w.row_or_uniform(id);
          for (int l = 0; l < kNumLabels; ++l) weight[l] += r[l];
          any = true;
        }
      }
      if (!any) continue;
      auto v = out.at(i, j);
      for (int l = 0; l < kNumLabels; ++l) v[l] *= weight[l];
    }
  }
  return out;
}

// ---- building --------------------------------------------------------------------

std::size_t DensityRanges::index(double density) const noexcept {
  if (ranges.empty() || !(density > gap)) return 0;
  const double idx = std::ceil(density / gap) - 1.0;
  const double last = static_cast<double>(ranges.size() - 1);
  return static_cast<std::size_t>(std::min(idx, last));
}

DensityRanges build_density_ranges(int bn_max, int gap) {
  if (gap < 1) throw UsageError("density gap must be at least 1");
  if (bn_max < 0) throw UsageError("bn_max must be non-negative");
  DensityRanges d;
  d.gap = gap;
  d.bn_max = bn_max;
  d.ranges.push_back({0, gap});
  while (d.ranges.back()[1] < bn_max + gap) {
    const int lo = d.ranges.back()[1] + 1;
    d.ranges.push_back({lo, lo + gap - 1});
  }
  return d;
}

LabelCounts count_building(const BuildingScene& scene, const DensityRanges& ranges) {
  if (!scene.density || !scene.labels) throw UsageError("building scene is incomplete");
  const Raster& density = *scene.density;
  const Raster& labels = *scene.labels;
  if (!density.same_shape(labels)) throw UsageError("density and label grids differ");
  if (scene.mask && !scene.mask->same_shape(labels)) throw UsageError("mask and label grids differ");
  LabelCounts counts;
  for (int i = 0; i < labels.height(); ++i) {
    for (int j = 0; j < labels.width(); ++j) {
      const int label = label_at(labels, i, j);
      if (label == 0 || !density.valid(i, j)) continue;
      if (scene.mask && scene.mask->at(i, j) != 1.0f) continue;
      counts[static_cast<int>(ranges.index(density.at(i, j)))][label - 1] += 1.0;
    }
  }
  return counts;
}

WeightMatrix train_building_matrix(std::span<const BuildingScene> scenes,
                                   const DensityRanges& ranges, double alpha) {
  if (scenes.empty()) throw UsageError("no training scenes");
  LabelCounts total;
  for (const auto& s : scenes) {
    for (const auto& [key, row] : count_building(s, ranges)) {
      for (int l = 0; l < kNumLabels; ++l) total[key][l] += row[l];
    }
  }
  if (total.empty()) throw DataError("no confident labeled patches for the building model");
  return normalize_counts(total, alpha);
}

VotesCube apply_building_fusion(const VotesCube& votes, const Raster& density,
                                const WeightMatrix& w, const DensityRanges& ranges,
                                const Raster* mask) {
  check_cube_shape(votes, density, "density");
  if (mask) check_cube_shape(votes, *mask, "mask");
  VotesCube out = votes;
  for (int i = 0; i < votes.rows(); ++i) {
    for (int j = 0; j < votes.cols(); ++j) {
      if (mask && mask->at(i, j) != 1.0f) continue;
      if (!density.valid(i, j)) continue;
      const LabelRow& r = w.row_or_uniform(static_cast<int>(ranges.index(density.at(i, j))));
      auto v = out.at(i, j);
      for (int l = 0; l < kNumLabels; ++l) v[l] *= r[l];
    }
  }
  return out;
}

// ---- serialization ---------------------------------------------------------------

void write_weight_matrix(const WeightMatrix& w, const std::filesystem::path& path,
                         const DensityRanges* ranges) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  if (ranges) out << "# gap=" << ranges->gap << " bn_max=" << ranges->bn_max << '\n';
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", w.laplace_alpha);
  out << "# alpha=" << buf << '\n';
  out << "key";
  for (int l = 1; l <= kNumLabels; ++l) out << ",lcz" << l;
  out << '\n';
  for (std::size_t r = 0; r < w.rows(); ++r) {
    out << w.row_keys[r];
    for (double p : w.probs[r]) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

StoredWeights read_weight_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weight matrix " + path.string());
  StoredWeights s;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      int gap = 0, bn_max = 0;
      double alpha = 0.0;
      if (std::sscanf(line.c_str(), "# gap=%d bn_max=%d", &gap, &bn_max) == 2) {
        s.ranges = build_density_ranges(bn_max, gap);
      } else if (std::sscanf(line.c_str(), "# alpha=%lf", &alpha) == 1) {
        s.matrix.laplace_alpha = alpha;
      }
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != kNumLabels + 1) {
      throw DataError("weight matrix line " + std::to_string(line_no) + ": expected 18 columns");
    }
    LabelRow row{};
    try {
      s.matrix.row_keys.push_back(std::stoi(cells[0]));
      for (int l = 0; l < kNumLabels; ++l) row[l] = std::stod(cells[l + 1]);
    } catch (const std::exception&) {
      throw DataError("weight matrix line " + std::to_string(line_no) + ": bad number");
    }
    s.matrix.probs.push_back(row);
  }
  if (!std::is_sorted(s.matrix.row_keys.begin(), s.matrix.row_keys.end())) {
    throw DataError("weight matrix keys must be ascending");
  }
  return s;
}

}  // namespace lcz
