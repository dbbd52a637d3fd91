#include "lcz/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lcz/error.hpp"

namespace lcz {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_same_v<T, double>) {
      out = std::stod(v, &used);
    } else if constexpr (std::is_signed_v<T>) {
      out = static_cast<T>(std::stoll(v, &used));
    } else {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
      out = static_cast<T>(std::stoull(v, &used));
    }
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': invalid number '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split(v, ',')) out.push_back(parse_number<int>(key, item));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const std::filesystem::path& p, bool raster) {
  const auto probe = raster ? std::filesystem::path(raster_stem(p).string() + ".hdr") : p;
  if (!std::filesystem::exists(probe)) throw DataError("missing file: " + probe.string());
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (base.empty()) return p.string();
  std::error_code ec;
  auto rel = std::filesystem::relative(p, base, ec);
  return ec || rel.empty() ? p.string() : rel.string();
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::none: return "none";
    case FusionMode::landuse: return "landuse";
    case FusionMode::building: return "building";
    case FusionMode::both: return "both";
  }
  return "both";
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "none") return FusionMode::none;
  if (s == "landuse") return FusionMode::landuse;
  if (s == "building") return FusionMode::building;
  if (s == "both") return FusionMode::both;
  throw UsageError("unknown fusion mode '" + s + "' (none|landuse|building|both)");
}

bool uses_landuse(FusionMode m) noexcept { return m == FusionMode::landuse || m == FusionMode::both; }
bool uses_building(FusionMode m) noexcept { return m == FusionMode::building || m == FusionMode::both; }

// ---- pipeline config --------------------------------------------------------------

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw UsageError("config: " + what); };
  if (n_trees < 1) fail("n_trees must be >= 1");
  if (min_leaf < 1) fail("min_leaf must be >= 1");
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (gap < 1) fail("gap must be >= 1");
  if (search_radius_px < 0) fail("search_radius_px must be >= 0");
  if (!(surface_fraction_threshold >= 0.0 && surface_fraction_threshold <= 1.0)) {
    fail("surface_fraction_threshold must lie in [0,1]");
  }
  if (!(mask_binarize_threshold >= -1.0 && mask_binarize_threshold <= 1.0)) {
    fail("mask_binarize_threshold must lie in [-1,1]");
  }
  if (glcm_levels < 2 || glcm_levels > 256) fail("glcm_levels must lie in [2,256]");
  if (glcm_directions.empty()) fail("glcm_directions must not be empty");
  for (int d : glcm_directions) {
    if (d != 0 && d != 45 && d != 90 && d != 135) fail("glcm_directions accepts 0,45,90,135");
  }
  if (glcm_offset < 1) fail("glcm_offset must be >= 1");
  if (mp_radii.empty()) fail("mp_radii must not be empty");
  for (int r : mp_radii) {
    if (r < 1) fail("mp_radii entries must be >= 1");
  }
  if (!(laplace_alpha >= 0.0)) fail("laplace_alpha must be >= 0");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  out << "n_trees=" << n_trees << '\n'
      << "min_leaf=" << min_leaf << '\n'
      << "lambda_features=" << lambda_features << '\n'
      << "max_depth=" << max_depth << '\n'
      << "gap=" << gap << '\n'
      << "search_radius_px=" << search_radius_px << '\n'
      << "surface_fraction_threshold=" << fmt(surface_fraction_threshold) << '\n'
      << "mask_binarize_threshold=" << fmt(mask_binarize_threshold) << '\n'
      << "uncovered_policy=" << (uncovered_policy == UncoveredPolicy::zero ? "zero" : "exclude")
      << '\n'
      << "glcm_levels=" << glcm_levels << '\n'
      << "glcm_directions=" << join(glcm_directions) << '\n'
      << "glcm_offset=" << glcm_offset << '\n'
      << "glcm_role=" << to_string(glcm_role) << '\n'
      << "mp_radii=" << join(mp_radii) << '\n'
      << "laplace_alpha=" << fmt(laplace_alpha) << '\n'
      << "seed=" << seed << '\n'
      << "fusion_mode=" << to_string(fusion_mode) << '\n'
      << "baseline_mode=" << (baseline_mode ? "true" : "false") << '\n'
      << "filter_mode=" << (filter_mode == FilterMode::median ? "median" : "mode") << '\n'
      << "threads=" << threads << '\n';
  return out.str();
}

PipelineConfig PipelineConfig::from_key_values(const KeyValues& kv) {
  PipelineConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "n_trees") c.n_trees = parse_number<std::size_t>(k, v);
    else if (k == "min_leaf") c.min_leaf = parse_number<std::size_t>(k, v);
    else if (k == "lambda_features") c.lambda_features = parse_number<std::size_t>(k, v);
    else if (k == "max_depth") c.max_depth = parse_number<int>(k, v);
    else if (k == "gap") c.gap = parse_number<int>(k, v);
    else if (k == "search_radius_px") c.search_radius_px = parse_number<int>(k, v);
    else if (k == "surface_fraction_threshold") c.surface_fraction_threshold = parse_number<double>(k, v);
    else if (k == "mask_binarize_threshold") c.mask_binarize_threshold = parse_number<double>(k, v);
    else if (k == "uncovered_policy") {
      if (v == "zero") c.uncovered_policy = UncoveredPolicy::zero;
      else if (v == "exclude") c.uncovered_policy = UncoveredPolicy::exclude;
      else throw UsageError("config key 'uncovered_policy': expected zero|exclude");
    } else if (k == "glcm_levels") c.glcm_levels = parse_number<int>(k, v);
    else if (k == "glcm_directions") c.glcm_directions = parse_int_list(k, v);
    else if (k == "glcm_offset") c.glcm_offset = parse_number<int>(k, v);
    else if (k == "glcm_role") c.glcm_role = parse_band_role(v);
    else if (k == "mp_radii") c.mp_radii = parse_int_list(k, v);
    else if (k == "laplace_alpha") c.laplace_alpha = parse_number<double>(k, v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "fusion_mode") c.fusion_mode = parse_fusion_mode(v);
    else if (k == "baseline_mode") c.baseline_mode = parse_bool(k, v);
    else if (k == "filter_mode") {
      if (v == "median") c.filter_mode = FilterMode::median;
      else if (v == "mode") c.filter_mode = FilterMode::mode;
      else throw UsageError("config key 'filter_mode': expected median|mode");
    } else if (k == "threads") c.threads = parse_number<unsigned>(k, v);
    else throw UsageError("unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_key_values(read_key_values(path));
}

void PipelineConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << to_text();
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureOptions PipelineConfig::feature_options() const {
  FeatureOptions o;
  o.mp_radii = mp_radii;
  o.glcm.levels = glcm_levels;
  o.glcm.directions_deg = glcm_directions;
  o.glcm.offset = glcm_offset;
  o.glcm_role = glcm_role;
  return o;
}

CcfParams PipelineConfig::ccf_params() const {
  CcfParams p;
  p.n_trees = n_trees;
  p.tree.min_leaf = min_leaf;
  p.tree.lambda_features = lambda_features;
  p.tree.max_depth = max_depth;
  p.seed = seed;
  p.threads = threads;
  return p;
}

ConfidenceParams PipelineConfig::confidence_params() const {
  ConfidenceParams p;
  p.search_radius_px = search_radius_px;
  p.surface_fraction_threshold = surface_fraction_threshold;
  p.binarize_threshold = mask_binarize_threshold;
  p.uncovered = uncovered_policy;
  return p;
}

// ---- scene manifest -------------------------------------------------------------

SceneManifest SceneManifest::load(const std::filesystem::path& path) {
  const KeyValues kv = read_key_values(path);
  SceneManifest m;
  m.base_dir = path.parent_path();
  std::map<int, AcquisitionEntry> acqs;
  for (const auto& [k, v] : kv) {
    if (k == "scene_id") {
      m.scene_id = v;
    } else if (k == "labels") {
      m.labels = resolve(m.base_dir, v);
    } else if (k == "osm.landuse") {
      m.landuse = resolve(m.base_dir, v);
    } else if (k == "osm.building") {
      m.building = resolve(m.base_dir, v);
    } else if (k == "osm.points") {
      m.points = resolve(m.base_dir, v);
    } else if (k.rfind("acquisition.", 0) == 0) {
      const auto rest = k.substr(12);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) throw UsageError("manifest key '" + k + "' lacks a field");
      const int idx = parse_number<int>(k, rest.substr(0, dot));
      const std::string field = rest.substr(dot + 1);
      AcquisitionEntry& a = acqs[idx];
      if (field == "id") {
        a.id = v;
      } else if (field == "satellite") {
        a.satellite = v;
      } else if (field == "date") {
        a.date = v;
      } else if (field == "bands") {
        for (const auto& item : split(v, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) throw UsageError("manifest bands entry '" + item + "' needs name:path");
          a.bands.emplace_back(trim(item.substr(0, colon)),
                               resolve(m.base_dir, trim(item.substr(colon + 1))));
        }
      } else if (field == "roles") {
        for (const auto& item : split(v, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) throw UsageError("manifest roles entry '" + item + "' needs role:band");
          a.roles[parse_band_role(trim(item.substr(0, colon)))] = trim(item.substr(colon + 1));
        }
      } else {
        throw UsageError("unknown manifest field '" + field + "'");
      }
    } else {
      throw UsageError("unknown manifest key '" + k + "'");
    }
  }
  for (auto& [idx, a] : acqs) {
    if (a.id.empty()) a.id = "acq" + std::to_string(idx);
    if (a.bands.empty()) throw UsageError("acquisition " + a.id + " lists no bands");
    m.acquisitions.push_back(std::move(a));
  }
  if (m.acquisitions.empty()) throw UsageError("manifest " + path.string() + " has no acquisitions");
  if (m.scene_id.empty()) m.scene_id = path.stem().string();

  for (const auto& a : m.acquisitions) {
    for (const auto& [name, p] : a.bands) require_file(p, true);
  }
  for (const auto* p : {&m.labels, &m.landuse, &m.building}) {
    if (*p) require_file(**p, true);
  }
  if (m.points) require_file(*m.points, false);
  return m;
}

void SceneManifest::save(const std::filesystem::path& path) const {
  const auto base = path.parent_path();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "scene_id=" << scene_id << '\n';
  if (labels) out << "labels=" << relative_to(*labels, base) << '\n';
  if (landuse) out << "osm.landuse=" << relative_to(*landuse, base) << '\n';
  if (building) out << "osm.building=" << relative_to(*building, base) << '\n';
  if (points) out << "osm.points=" << relative_to(*points, base) << '\n';
  for (std::size_t i = 0; i < acquisitions.size(); ++i) {
    const auto& a = acquisitions[i];
    const std::string prefix = "acquisition." + std::to_string(i) + ".";
    out << prefix << "id=" << a.id << '\n';
    if (!a.satellite.empty()) out << prefix << "satellite=" << a.satellite << '\n';
    if (!a.date.empty()) out << prefix << "date=" << a.date << '\n';
    out << prefix << "bands=";
    for (std::size_t b = 0; b < a.bands.size(); ++b) {
      out << (b ? "," : "") << a.bands[b].first << ':' << relative_to(a.bands[b].second, base);
    }
    out << '\n' << prefix << "roles=";
    bool first = true;
    for (const auto& [role, band] : a.roles) {
      out << (first ? "" : ",") << to_string(role) << ':' << band;
      first = false;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace lcz
