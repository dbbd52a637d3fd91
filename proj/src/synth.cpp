#include "lcz/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lcz/error.hpp"
#include "lcz/labels.hpp"
#include "lcz/random.hpp"

namespace lcz {
namespace {

constexpr double kPatchM = 100.0;
constexpr double kBandM = 10.0;
constexpr double kOsmM = 5.0;
constexpr int kOsmK = 20;  // 5 m pixels per patch side
constexpr int kBandK = 10;
constexpr double kHazeLevel = 0.2;
constexpr std::array<const char*, 4> kGroundEndmembers = {"vegetation", "impervious", "soil",
                                                          "water"};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw UsageError("synth spec key '" + key + "': invalid number '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw UsageError("synth spec key '" + key + "': expected an integer");
  return static_cast<int>(d);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(to_double(key, s));
  return out;
}

int label_suffix(const std::string& key, std::size_t prefix_len) {
  const int l = to_int(key, key.substr(prefix_len));
  if (!is_label(l)) throw UsageError("synth spec key '" + key + "': label out of range");
  return l;
}

double gauss(Rng& rng) {
  // Box-Muller on the portable uniform source; std::normal_distribution is
  // implementation-defined and would break cross-platform reproducibility.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

std::array<double, 4> normalized(std::array<double, 4> c) {
  double s = 0.0;
  for (double& v : c) {
    v = std::max(v, 0.0);
    s += v;
  }
  if (s <= 0.0) return {0.25, 0.25, 0.25, 0.25};
  for (double& v : c) v /= s;
  return c;
}

int draw_landuse(const std::vector<std::pair<int, double>>& table, Rng& rng) {
  double total = 0.0;
  for (const auto& [id, p] : table) total += p;
  double u = uniform01(rng) * total;
  for (const auto& [id, p] : table) {
    if (u < p) return id;
    u -= p;
  }
  return table.back().first;
}

struct Building {
  int row0, col0, rows, cols;
};

/// Lays out `n` buildings on a g x g cell lattice inside one patch so their
/// footprint covers close to `target` of the patch area.
std::vector<Building> place_buildings(int n, double target, Rng& rng) {
  std::vector<Building> out;
  if (n <= 0 || target <= 0.0) return out;
  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int cell = kOsmK / g;
  if (cell < 2) throw UsageError("synth spec: too many buildings per patch");
  const auto cells = sample_without_replacement(static_cast<std::size_t>(g * g),
                                                static_cast<std::size_t>(n), rng);
  const double area = target * kOsmK * kOsmK / n;
  for (std::size_t c : cells) {
    const int cr = static_cast<int>(c) / g, cc = static_cast<int>(c) % g;
    const double aspect = uniform(rng, 0.75, 1.33);
    const int w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, cell - 1);
    const int h = std::clamp(static_cast<int>(std::lround(area / w)), 1, cell - 1);
    const int r0 = cr * cell + uniform_int(rng, 0, cell - h);
    const int c0 = cc * cell + uniform_int(rng, 0, cell - w);
    out.push_back({r0, c0, h, w});
  }
  return out;
}

double footprint(const std::vector<Building>& bs) {
  double a = 0.0;
  for (const auto& b : bs) a += b.rows * b.cols;
  return a / (kOsmK * kOsmK);
}

}  // namespace

// ---- spec ------------------------------------------------------------------------

SynthSpec SynthSpec::from_key_values(const KeyValues& kv) {
  SynthSpec s;
  for (const auto& [k, v] : kv) {
    if (k == "bands") {
      s.bands = split(v, ',');
    } else if (k == "roles") {
      for (const auto& item : split(v, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("synth spec roles entry needs role:band");
        s.roles[parse_band_role(item.substr(0, colon))] = item.substr(colon + 1);
      }
    } else if (k == "patch_cols") {
      s.patch_cols = to_int(k, v);
    } else if (k == "labels") {
      for (const auto& item : split(v, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("synth spec labels entry needs label:count");
        const int l = to_int(k, item.substr(0, colon));
        if (!is_label(l)) throw UsageError("synth spec: label out of range");
        s.label_counts.emplace_back(l, to_int(k, item.substr(colon + 1)));
      }
    } else if (k == "archetype_seed") {
      s.archetype_seed = static_cast<std::uint64_t>(to_int(k, v));
    } else if (k.rfind("endmember.", 0) == 0) {
      s.endmembers[k.substr(10)] = to_doubles(k, v);
    } else if (k.rfind("ground.", 0) == 0) {
      const auto vals = to_doubles(k, v);
      if (vals.size() != 4) throw UsageError("synth spec key '" + k + "': expected veg,imp,soil,water");
      s.ground[label_suffix(k, 7)] = {vals[0], vals[1], vals[2], vals[3]};
    } else if (k.rfind("buildings.", 0) == 0) {
      const auto vals = to_doubles(k, v);
      if (vals.size() != 2) throw UsageError("synth spec key '" + k + "': expected min,max");
      s.buildings[label_suffix(k, 10)] = {static_cast<int>(vals[0]), static_cast<int>(vals[1])};
    } else if (k.rfind("fraction.", 0) == 0) {
      const auto vals = to_doubles(k, v);
      if (vals.size() != 2) throw UsageError("synth spec key '" + k + "': expected lo,hi");
      s.fraction[label_suffix(k, 9)] = {vals[0], vals[1]};
    } else if (k.rfind("landuse.", 0) == 0) {
      auto& table = s.landuse[label_suffix(k, 8)];
      for (const auto& item : split(v, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("synth spec landuse entry needs id:prob");
        table.emplace_back(to_int(k, item.substr(0, colon)), to_double(k, item.substr(colon + 1)));
      }
    } else if (k == "archetype_jitter") {
      s.archetype_jitter = to_double(k, v);
    } else if (k == "patch_noise") {
      s.patch_noise = to_double(k, v);
    } else if (k == "pixel_noise") {
      s.pixel_noise = to_double(k, v);
    } else if (k == "city_gain_sd") {
      s.city_gain_sd = to_double(k, v);
    } else if (k == "city_offset_sd") {
      s.city_offset_sd = to_double(k, v);
    } else if (k == "acquisition_severity") {
      s.acquisition_severity = to_doubles(k, v);
    } else if (k == "acq_gain_sd") {
      s.acq_gain_sd = to_double(k, v);
    } else if (k == "acq_offset_sd") {
      s.acq_offset_sd = to_double(k, v);
    } else if (k == "acq_haze") {
      s.acq_haze = to_double(k, v);
    } else if (k == "acq_veg_sd") {
      s.acq_veg_sd = to_double(k, v);
    } else if (k == "acq_noise") {
      s.acq_noise = to_double(k, v);
    } else if (k == "gap_fraction") {
      s.gap_fraction = to_double(k, v);
    } else if (k == "landuse_coverage_built") {
      s.landuse_coverage_built = to_double(k, v);
    } else if (k == "landuse_coverage_natural") {
      s.landuse_coverage_natural = to_double(k, v);
    } else if (k == "landuse_building_coverage") {
      s.landuse_building_coverage = to_double(k, v);
    } else {
      throw UsageError("unknown synth spec key '" + k + "'");
    }
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  return from_key_values(read_key_values(path));
}

int SynthSpec::total_patches() const {
  int n = 0;
  for (const auto& [l, c] : label_counts) n += c;
  return n;
}

void SynthSpec::validate() const {
  if (bands.empty()) throw UsageError("synth spec: no bands");
  for (const auto& [role, band] : roles) {
    if (std::find(bands.begin(), bands.end(), band) == bands.end()) {
      throw UsageError("synth spec: role " + std::string(to_string(role)) + " names unknown band " + band);
    }
  }
  for (const char* name : {"vegetation", "impervious", "soil", "water", "roof"}) {
    const auto it = endmembers.find(name);
    if (it == endmembers.end()) throw UsageError(std::string("synth spec: missing endmember.") + name);
    if (it->second.size() != bands.size()) {
      throw UsageError(std::string("synth spec: endmember.") + name + " needs one value per band");
    }
  }
  for (const auto& [l, c] : label_counts) {
    if (c < 0) throw UsageError("synth spec: negative patch count");
    if (!ground.count(l)) throw UsageError("synth spec: missing ground." + std::to_string(l));
  }
  if (total_patches() <= 0) throw DataError("synth spec describes zero patches");
  if (acquisition_severity.empty()) throw UsageError("synth spec: need at least one acquisition");
  if (gap_fraction < 0.0 || gap_fraction > 1.0) throw UsageError("synth spec: gap_fraction in [0,1]");
  if (patch_cols < 0) throw UsageError("synth spec: patch_cols must be >= 0");
}

// ---- generation ---------------------------------------------------------------------

SyntheticScene generate_scene(const SynthSpec& spec, std::uint64_t seed,
                              const std::string& scene_id) {
  spec.validate();
  const int n_patches = spec.total_patches();
  const int cols = spec.patch_cols > 0
                       ? spec.patch_cols
                       : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_patches))));
  const int rows = (n_patches + cols - 1) / cols;

  SyntheticScene scene;
  scene.scene_id = scene_id;
  scene.labels = Raster::make_u8(cols, rows, kPatchM);
  scene.landuse = Raster::make_u8(cols * kOsmK, rows * kOsmK, kOsmM, 0);
  scene.building_true = Raster::make_u8(cols * kOsmK, rows * kOsmK, kOsmM, 0);

  // Spatially coherent layout: rank cells by a smooth random field and hand
  // out labels in contiguous runs of that ranking, giving exact counts.
  Rng layout(derive_seed(seed, 1));
  struct Bump {
    double y, x, s, a;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < 8; ++b) {
    bumps.push_back({uniform(layout, 0, rows), uniform(layout, 0, cols),
                     uniform(layout, 0.15, 0.4) * std::max(rows, cols), uniform(layout, -1, 1)});
  }
  std::vector<std::pair<double, int>> field;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double f = 1e-6 * uniform01(layout);
      for (const auto& b : bumps) {
        const double d2 = (i - b.y) * (i - b.y) + (j - b.x) * (j - b.x);
        f += b.a * std::exp(-d2 / (2 * b.s * b.s));
      }
      field.emplace_back(f, i * cols + j);
    }
  }
  std::sort(field.begin(), field.end());
  std::vector<int> order_labels;
  for (const auto& [l, c] : spec.label_counts) order_labels.push_back(l);
  shuffle(std::span<int>(order_labels), layout);
  std::vector<int> content(static_cast<std::size_t>(rows * cols), order_labels.back());
  {
    std::size_t pos = 0;
    for (int l : order_labels) {
      int count = 0;
      for (const auto& [ll, c] : spec.label_counts) {
        if (ll == l) count += c;
      }
      for (int n = 0; n < count; ++n, ++pos) {
        const int cell = field[pos].second;
        content[cell] = l;
        scene.labels.values()[cell] = static_cast<float>(l);
      }
    }
    // Leftover cells copy the last run's land cover but stay unlabeled.
  }

  // Buildings and landuse.
  Rng osm(derive_seed(seed, 2));
  std::vector<std::vector<Building>> patch_buildings(static_cast<std::size_t>(rows * cols));
  for (int cell = 0; cell < rows * cols; ++cell) {
    const int l = content[cell];
    const int pi = cell / cols, pj = cell % cols;
    const auto bit = spec.buildings.find(l);
    std::vector<Building> bs;
    if (bit != spec.buildings.end() && bit->second[1] > 0) {
      const FractionBand band = surface_fraction_band(l);
      const auto fit = spec.fraction.find(l);
      const double lo = (fit != spec.fraction.end() ? fit->second[0] : band.lo) / 100.0;
      const double hi = (fit != spec.fraction.end() ? fit->second[1] : band.hi) / 100.0;
      double best_err = 1e9;
      for (int attempt = 0; attempt < 20; ++attempt) {
        const int n = uniform_int(osm, bit->second[0], bit->second[1]);
        const double target = uniform(osm, lo, hi);
        auto cand = place_buildings(n, target, osm);
        const double f = footprint(cand);
        const bool inside = f <= hi + 1e-12 && (lo > 0.0 ? f > lo : f >= lo);
        // Distance to the nearest admissible footprint; an exclusive lower
        // bound sits one pixel quantum above lo.
        const double quantum = 1.0 / (kOsmK * kOsmK);
        const double err = inside ? 0.0 : f > hi ? f - hi : lo - f + (lo > 0.0 ? quantum : 0.0);
        if (err < best_err) {
          best_err = err;
          bs = std::move(cand);
        }
        if (inside) break;
      }
    }
    for (const auto& b : bs) {
      for (int y = 0; y < b.rows; ++y) {
        for (int x = 0; x < b.cols; ++x) {
          scene.building_true.at(pi * kOsmK + b.row0 + y, pj * kOsmK + b.col0 + x) = 1.0f;
        }
      }
    }

    const auto lit = spec.landuse.find(l);
    if (lit != spec.landuse.end() && !lit->second.empty()) {
      if (is_built_label(l)) {
        if (uniform01(osm) < spec.landuse_coverage_built) {
          const int id = draw_landuse(lit->second, osm);
          for (const auto& b : bs) {
            if (uniform01(osm) >= spec.landuse_building_coverage) continue;
            for (int y = 0; y < b.rows; ++y) {
              for (int x = 0; x < b.cols; ++x) {
                scene.landuse.at(pi * kOsmK + b.row0 + y, pj * kOsmK + b.col0 + x) =
                    static_cast<float>(id);
              }
            }
          }
        }
      } else if (uniform01(osm) < spec.landuse_coverage_natural) {
        const int id = draw_landuse(lit->second, osm);
        for (int y = 0; y < kOsmK; ++y) {
          for (int x = 0; x < kOsmK; ++x) {
            scene.landuse.at(pi * kOsmK + y, pj * kOsmK + x) = static_cast<float>(id);
          }
        }
      }
    }
    patch_buildings[cell] = std::move(bs);
  }

  // Gap injection on built patches: the mapped layer loses whole patches.
  scene.building = scene.building_true;
  std::vector<int> built_cells;
  for (int cell = 0; cell < rows * cols; ++cell) {
    if (is_built_label(content[cell]) && !patch_buildings[cell].empty()) built_cells.push_back(cell);
  }
  std::vector<char> gapped(static_cast<std::size_t>(rows * cols), 0);
  if (spec.gap_fraction > 0.0 && !built_cells.empty()) {
    Rng gap_rng(derive_seed(seed, 3));
    const auto n_gap = static_cast<std::size_t>(std::lround(spec.gap_fraction * built_cells.size()));
    auto pick = sample_without_replacement(built_cells.size(), n_gap, gap_rng);
    std::sort(pick.begin(), pick.end());
    for (std::size_t p : pick) {
      const int cell = built_cells[p];
      const int pi = cell / cols, pj = cell % cols;
      gapped[cell] = 1;
      for (int y = 0; y < kOsmK; ++y) {
        for (int x = 0; x < kOsmK; ++x) scene.building.at(pi * kOsmK + y, pj * kOsmK + x) = 0.0f;
      }
      scene.gaps.push_back({pi * kOsmK, pj * kOsmK, kOsmK, kOsmK, pi, pj});
    }
  }
  for (int cell = 0; cell < rows * cols; ++cell) {
    if (gapped[cell]) continue;
    const int pi = cell / cols, pj = cell % cols;
    for (const auto& b : patch_buildings[cell]) {
      scene.points.push_back({(pj * kOsmK + b.col0 + b.cols * 0.5) * kOsmM,
                              (pi * kOsmK + b.row0 + b.rows * 0.5) * kOsmM});
    }
  }

  // Spectra: per-label ground archetypes shared across cities, perturbed per
  // patch (shared by all acquisitions) and per acquisition.
  const std::size_t nb = spec.bands.size();
  std::map<int, std::array<double, 4>> archetype;
  for (const auto& [l, comp] : spec.ground) {
    Rng arng(derive_seed(spec.archetype_seed, static_cast<std::uint64_t>(l)));
    auto c = comp;
    for (double& v : c) v += spec.archetype_jitter * gauss(arng);
    archetype[l] = normalized(c);
  }
  Rng base_rng(derive_seed(seed, 4));
  std::vector<std::array<double, 4>> patch_comp(static_cast<std::size_t>(rows * cols));
  for (int cell = 0; cell < rows * cols; ++cell) {
    auto c = archetype.at(content[cell]);
    for (double& v : c) v += spec.patch_noise * gauss(base_rng);
    patch_comp[cell] = normalized(c);
  }
  Rng city_rng(derive_seed(seed, 5));
  std::vector<double> city_gain(nb), city_off(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    city_gain[b] = 1.0 + spec.city_gain_sd * gauss(city_rng);
    city_off[b] = spec.city_offset_sd * gauss(city_rng);
  }
  const auto& roof = spec.endmembers.at("roof");

  for (std::size_t a = 0; a < spec.acquisition_severity.size(); ++a) {
    const double sev = spec.acquisition_severity[a];
    Rng acq(derive_seed(seed, 100 + a));
    std::vector<double> gain(nb), off(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      gain[b] = 1.0 + spec.acq_gain_sd * sev * gauss(acq);
      off[b] = spec.acq_offset_sd * sev * gauss(acq);
    }
    const double veg_scale = 1.0 + spec.acq_veg_sd * sev * gauss(acq);
    const double haze = std::clamp(spec.acq_haze * sev, 0.0, 0.95);
    const double extra = spec.acq_noise * sev;

    std::vector<std::vector<double>> ends(4);
    for (int e = 0; e < 4; ++e) ends[e] = spec.endmembers.at(kGroundEndmembers[e]);
    for (double& v : ends[0]) v *= veg_scale;

    SyntheticAcquisition out;
    out.id = "t" + std::to_string(a);
    out.severity = sev;
    out.stack.acquisition_id = scene_id + "_" + out.id;
    out.stack.roles = spec.roles;
    std::vector<Raster> bands(nb, Raster(cols * kBandK, rows * kBandK, kBandM, 0.0f));
    for (int cell = 0; cell < rows * cols; ++cell) {
      const int pi = cell / cols, pj = cell % cols;
      auto c = patch_comp[cell];
      for (double& v : c) v += extra * gauss(acq);
      c = normalized(c);
      std::vector<double> ground(nb, 0.0);
      for (std::size_t b = 0; b < nb; ++b) {
        for (int e = 0; e < 4; ++e) ground[b] += c[e] * ends[e][b];
      }
      for (int y = 0; y < kBandK; ++y) {
        for (int x = 0; x < kBandK; ++x) {
          const int oy = pi * kOsmK + 2 * y, ox = pj * kOsmK + 2 * x;
          const double share = 0.25 * (scene.building_true.at(oy, ox) + scene.building_true.at(oy, ox + 1) +
                                       scene.building_true.at(oy + 1, ox) +
                                       scene.building_true.at(oy + 1, ox + 1));
          for (std::size_t b = 0; b < nb; ++b) {
            double r = share * roof[b] + (1.0 - share) * ground[b];
            r = (r * city_gain[b] + city_off[b]) * gain[b] + off[b];
            r = (1.0 - haze) * r + haze * kHazeLevel;
            r += spec.pixel_noise * gauss(acq);
            bands[b].at(pi * kBandK + y, pj * kBandK + x) = static_cast<float>(std::clamp(r, 1e-4, 1.0));
          }
        }
      }
    }
    for (std::size_t b = 0; b < nb; ++b) out.stack.bands.push_back({spec.bands[b], std::move(bands[b])});
    scene.acquisitions.push_back(std::move(out));
  }
  return scene;
}

std::filesystem::path write_synthetic_scene(const SyntheticScene& scene,
                                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SceneManifest m;
  m.scene_id = scene.scene_id;
  m.base_dir = dir;
  write_raster(scene.labels, dir / "labels");
  write_raster(scene.landuse, dir / "landuse");
  write_raster(scene.building, dir / "building");
  write_raster(scene.building_true, dir / "building_true");
  write_points_csv(scene.points, dir / "points.csv");
  m.labels = dir / "labels.hdr";
  m.landuse = dir / "landuse.hdr";
  m.building = dir / "building.hdr";
  m.points = dir / "points.csv";
  {
    std::ofstream g(dir / "gaps.csv");
    if (!g) throw DataError("cannot write " + (dir / "gaps.csv").string());
    g << "row0,col0,rows,cols,patch_i,patch_j\n";
    for (const auto& r : scene.gaps) {
      g << r.row0 << ',' << r.col0 << ',' << r.rows << ',' << r.cols << ',' << r.patch_i << ','
        << r.patch_j << '\n';
    }
  }
  for (const auto& a : scene.acquisitions) {
    AcquisitionEntry e;
    e.id = a.id;
    e.satellite = "synthetic";
    e.date = a.id;
    e.roles = a.stack.roles;
    for (const auto& b : a.stack.bands) {
      const auto stem = dir / (a.id + "_" + b.name);
      write_raster(b.raster, stem);
      e.bands.emplace_back(b.name, std::filesystem::path(stem.string() + ".hdr"));
    }
    m.acquisitions.push_back(std::move(e));
  }
  const auto path = dir / "manifest.txt";
  m.save(path);
  return path;
}

}  // namespace lcz
