#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lcz {

struct PatchCoord {
  int i = 0;  // patch row
  int j = 0;  // patch column
  bool operator==(const PatchCoord&) const = default;
};

/// Per-patch feature rows with optional LCZ labels (0 = unlabeled).
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> feature_names);

  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  std::size_t n_features() const noexcept { return names_.size(); }
  std::size_t n_rows() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }

  void add_row(PatchCoord coord, std::span<const double> values, int label = 0);

  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * names_.size(), names_.size()};
  }
  std::span<double> row(std::size_t r) noexcept {
    return {values_.data() + r * names_.size(), names_.size()};
  }
  double at(std::size_t r, std::size_t f) const noexcept { return values_[r * names_.size() + f]; }
  double& at(std::size_t r, std::size_t f) noexcept { return values_[r * names_.size() + f]; }

  PatchCoord coord(std::size_t r) const noexcept { return coords_[r]; }
  int label(std::size_t r) const noexcept { return labels_[r]; }
  void set_label(std::size_t r, int label);
  bool has_labels() const noexcept;
  bool row_finite(std::size_t r) const noexcept;

  std::optional<std::size_t> index_of(const std::string& name) const;
  FeatureTable select_rows(std::span<const std::size_t> rows) const;
  /// Appends rows of `other`; feature names must match exactly.
  void append(const FeatureTable& other);
  /// Adds a column filled with `values` (one per row).
  void add_column(const std::string& name, std::span<const double> values);

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::vector<PatchCoord> coords_;
  std::vector<std::uint8_t> labels_;
};

/// CSV with header `patch_i,patch_j,label,<names...>`; empty label = unlabeled.
void write_feature_csv(const FeatureTable& t, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace lcz
