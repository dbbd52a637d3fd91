#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcz/feature_table.hpp"
#include "lcz/labels.hpp"

namespace lcz {

// ---- canonical correlation analysis ----------------------------------------

struct CcaResult {
  std::vector<std::vector<double>> projections;  // unit-norm weight vectors, length p
  std::vector<double> correlations;              // descending, in [0,1]
};

/// CCA between the columns of `x` (row-major n x p) and the one-hot encoding
/// of `labels` (values 1..17, at least two distinct). Returns up to
/// min(p, classes-1) directions from the ridge-regularized generalized
/// eigenproblem; each reported correlation is that direction's realized
/// correlation with the class indicators.
CcaResult cca_project(std::span<const double> x, std::size_t n, std::size_t p,
                      std::span<const int> labels, double ridge = 1e-8);

// ---- canonical correlation trees ------------------------------------------

struct CctParams {
  std::size_t min_leaf = 1;
  std::size_t lambda_features = 0;  // 0 = ceil(sqrt(p))
  int max_depth = 0;                // 0 = unlimited
  double ridge = 1e-8;
  bool axis_aligned = false;        // split on raw feature axes (reference forest)
};

using ClassCounts = std::array<std::uint32_t, kNumLabels>;

struct CctNode {
  bool leaf = true;
  std::vector<std::uint32_t> features;  // internal: feature indices
  std::vector<double> weights;          // internal: projection weights
  double threshold = 0.0;               // internal: left iff projection <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  ClassCounts counts{};                 // training samples reaching the node
  std::uint8_t label = 0;               // leaf: majority class, ties -> lowest
};

class CanonicalCorrelationTree {
 public:
  CanonicalCorrelationTree() = default;
  explicit CanonicalCorrelationTree(std::vector<CctNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<CctNode>& nodes() const noexcept { return nodes_; }
  const CctNode& root() const { return nodes_.front(); }
  const CctNode& leaf_for(std::span<const double> row) const;
  int predict(std::span<const double> row) const { return leaf_for(row).label; }
  int depth() const;

 private:
  std::vector<CctNode> nodes_;
};

double project(const CctNode& node, std::span<const double> row) noexcept;

struct ThresholdSplit {
  bool found = false;
  double threshold = 0.0;  // left iff value <= threshold
  double gain = 0.0;       // entropy reduction in nats
  std::size_t n_left = 0;
};

/// Best information-gain threshold along one projected coordinate. Candidates
/// are midpoints between consecutive distinct sorted values; both sides must
/// hold at least `min_leaf` samples and the gain must be positive.
ThresholdSplit best_threshold(std::span<const double> values, std::span<const int> labels,
                              std::size_t min_leaf);

/// Trains on every row of `table`; all rows must be labeled and finite.
CanonicalCorrelationTree train_cct(const FeatureTable& table, const CctParams& params,
                                   std::uint64_t seed);

// ---- forest -----------------------------------------------------------------

struct CcfParams {
  std::size_t n_trees = 20;
  CctParams tree;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = hardware concurrency
};

class CcfModel {
 public:
  CcfModel() = default;
  CcfModel(std::vector<std::string> feature_names, std::vector<CanonicalCorrelationTree> trees,
           std::uint64_t seed)
      : feature_names_(std::move(feature_names)), trees_(std::move(trees)), seed_(seed) {}

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<CanonicalCorrelationTree>& trees() const noexcept { return trees_; }
  std::size_t n_trees() const noexcept { return trees_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::vector<std::string> feature_names_;
  std::vector<CanonicalCorrelationTree> trees_;
  std::uint64_t seed_ = 0;
};

/// Row indices that are labeled and have finite features.
std::vector<std::size_t> trainable_rows(const FeatureTable& table);

CcfModel train_ccf(const FeatureTable& table, const CcfParams& params);

class VotesCube {
 public:
  VotesCube() = default;
  VotesCube(int rows, int cols);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::span<double, kNumLabels> at(int i, int j) noexcept {
    return std::span<double, kNumLabels>(votes_.data() + index(i, j) * kNumLabels, kNumLabels);
  }
  std::span<const double, kNumLabels> at(int i, int j) const noexcept {
    return std::span<const double, kNumLabels>(votes_.data() + index(i, j) * kNumLabels,
                                               kNumLabels);
  }
  bool classified(int i, int j) const noexcept { return classified_[index(i, j)] != 0; }
  void set_classified(int i, int j, bool v) noexcept { classified_[index(i, j)] = v ? 1 : 0; }
  double total(int i, int j) const noexcept;

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * cols_ + j;
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> votes_;
  std::vector<std::uint8_t> classified_;
};

/// One vote per tree for its leaf's majority label. Rows with non-finite
/// features leave their pixel all-zero and unclassified.
VotesCube predict_votes(const CcfModel& model, const FeatureTable& table, int rows, int cols);

/// Per-row forest label (majority over trees, ties -> lowest); 0 for non-finite rows.
std::vector<int> predict_labels(const CcfModel& model, const FeatureTable& table);

// ---- permutation importance ------------------------------------------------

struct FeatureImportance {
  std::string feature;
  std::size_t index = 0;
  double importance = 0.0;  // mean held-out OA drop; may be negative
};

/// k-fold permutation importance, sorted by importance (desc), ties by column order.
std::vector<FeatureImportance> feature_importance(const FeatureTable& table,
                                                  const CcfParams& params,
                                                  std::size_t folds = 5,
                                                  std::uint64_t seed = 0);

// ---- serialization -----------------------------------------------------------

void write_ccf(const CcfModel& model, const std::filesystem::path& path);
CcfModel read_ccf(const std::filesystem::path& path);

}  // namespace lcz
