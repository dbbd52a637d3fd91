#include <cmath>
#include <fstream>
#include <sstream>

#include "lcz/error.hpp"
#include "lcz/feature_table.hpp"
#include "lcz/labels.hpp"

namespace lcz {

FeatureTable::FeatureTable(std::vector<std::string> feature_names)
    : names_(std::move(feature_names)) {}

void FeatureTable::add_row(PatchCoord coord, std::span<const double> values, int label) {
  if (values.size() != names_.size()) throw UsageError("feature row length mismatch");
  if (label != 0 && !is_label(label)) throw DataError("label out of range 1..17");
  values_.insert(values_.end(), values.begin(), values.end());
  coords_.push_back(coord);
  labels_.push_back(static_cast<std::uint8_t>(label));
}

void FeatureTable::set_label(std::size_t r, int label) {
  if (label != 0 && !is_label(label)) throw DataError("label out of range 1..17");
  labels_[r] = static_cast<std::uint8_t>(label);
}

bool FeatureTable::has_labels() const noexcept {
  for (auto l : labels_) {
    if (l != 0) return true;
  }
  return false;
}

bool FeatureTable::row_finite(std::size_t r) const noexcept {
  for (double v : row(r)) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::optional<std::size_t> FeatureTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  FeatureTable out(names_);
  out.values_.reserve(rows.size() * names_.size());
  for (std::size_t r : rows) out.add_row(coords_[r], row(r), labels_[r]);
  return out;
}

void FeatureTable::append(const FeatureTable& other) {
  if (names_.empty() && coords_.empty()) names_ = other.names_;
  if (other.names_ != names_) throw DataError("feature tables have different feature names");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
}

void FeatureTable::add_column(const std::string& name, std::span<const double> values) {
  if (values.size() != n_rows()) throw UsageError("column length mismatch");
  const std::size_t p = names_.size();
  std::vector<double> next;
  next.reserve(n_rows() * (p + 1));
  for (std::size_t r = 0; r < n_rows(); ++r) {
    auto src = row(r);
    next.insert(next.end(), src.begin(), src.end());
    next.push_back(values[r]);
  }
  names_.push_back(name);
  values_ = std::move(next);
}

void write_feature_csv(const FeatureTable& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "patch_i,patch_j,label";
  for (const auto& n : t.feature_names()) out << ',' << n;
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    out << t.coord(r).i << ',' << t.coord(r).j << ',';
    if (t.label(r) != 0) out << t.label(r);
    for (double v : t.row(r)) {
      out << ',';
      if (std::isnan(v)) {
        out << "nan";
      } else {
        out << v;
      }
    }
    out << '\n';
  }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty feature table " + path.string());
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 3 || cols[0] != "patch_i" || cols[1] != "patch_j" || cols[2] != "label") {
    throw DataError("feature table header must start with patch_i,patch_j,label: " + path.string());
  }
  FeatureTable t(std::vector<std::string>(cols.begin() + 3, cols.end()));
  std::vector<double> vals(t.n_features());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) f.push_back(c);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != cols.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    }
    try {
      PatchCoord pc{std::stoi(f[0]), std::stoi(f[1])};
      const int label = f[2].empty() ? 0 : std::stoi(f[2]);
      for (std::size_t k = 0; k < vals.size(); ++k) {
        const auto& s = f[k + 3];
        vals[k] = (s == "nan" || s.empty()) ? std::nan("") : std::stod(s);
      }
      t.add_row(pc, vals, label);
    } catch (const std::invalid_argument&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    } catch (const std::out_of_range&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": number out of range");
    }
  }
  return t;
}

}  // namespace lcz
