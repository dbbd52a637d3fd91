#include "lcz/ccf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "lcz/error.hpp"
#include "lcz/random.hpp"

namespace lcz {
namespace {

double xlogx(double x) noexcept { return x > 0.0 ? x * std::log(x) : 0.0; }

int majority(const ClassCounts& counts) noexcept {
  int best = 0;
  for (int c = 1; c < kNumLabels; ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best + 1;
}

struct NodeSplit {
  ThresholdSplit split;
  std::vector<std::uint32_t> features;
  std::vector<double> weights;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureTable& table, const CctParams& params, std::uint64_t seed)
      : table_(table), params_(params), rng_(seed) {
    const std::size_t p = table.n_features();
    lambda_ = params.lambda_features > 0
                  ? std::min(params.lambda_features, p)
                  : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
    lambda_ = std::max<std::size_t>(lambda_, 1);
  }

  std::vector<CctNode> build() {
    std::vector<std::size_t> rows(table_.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t> rows, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    ClassCounts counts{};
    for (std::size_t r : rows) ++counts[table_.label(r) - 1];
    nodes_[id].counts = counts;
    nodes_[id].label = static_cast<std::uint8_t>(majority(counts));

    const std::size_t classes =
        std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (classes < 2 || rows.size() < 2 * params_.min_leaf || depth_capped) return id;

    NodeSplit best = search(rows, sampled_features(rows));
    if (!best.split.found) {
      // The sampled subset carried no usable split; widen to every feature so
      // separable nodes never end as impure leaves.
      best = search(rows, varying_features(rows, all_features()));
    }
    if (!best.split.found) return id;

    CctNode& node = nodes_[id];
    node.leaf = false;
    node.features = std::move(best.features);
    node.weights = std::move(best.weights);
    node.threshold = best.split.threshold;

    std::vector<std::size_t> left, right;
    left.reserve(best.split.n_left);
    right.reserve(rows.size() - best.split.n_left);
    for (std::size_t r : rows) {
      (project(nodes_[id], table_.row(r)) <= nodes_[id].threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::int32_t l = grow(std::move(left), depth + 1);
    const std::int32_t r = grow(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::uint32_t> all_features() const {
    std::vector<std::uint32_t> f(table_.n_features());
    std::iota(f.begin(), f.end(), 0u);
    return f;
  }

  std::vector<std::uint32_t> sampled_features(const std::vector<std::size_t>& rows) {
    const auto pick = sample_without_replacement(table_.n_features(), lambda_, rng_);
    std::vector<std::uint32_t> f(pick.begin(), pick.end());
    return varying_features(rows, std::move(f));
  }

  std::vector<std::uint32_t> varying_features(const std::vector<std::size_t>& rows,
                                              std::vector<std::uint32_t> features) const {
    std::erase_if(features, [&](std::uint32_t f) {
      const double first = table_.at(rows.front(), f);
      return std::all_of(rows.begin(), rows.end(),
                         [&](std::size_t r) { return table_.at(r, f) == first; });
    });
    return features;
  }

  NodeSplit search(const std::vector<std::size_t>& rows,
                   const std::vector<std::uint32_t>& features) const {
    NodeSplit best;
    if (features.empty()) return best;
    const std::size_t n = rows.size();
    const std::size_t q = features.size();

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = table_.label(rows[i]);

    std::vector<std::vector<double>> directions;
    if (params_.axis_aligned) {
      for (std::size_t k = 0; k < q; ++k) {
        std::vector<double> w(q, 0.0);
        w[k] = 1.0;
        directions.push_back(std::move(w));
      }
    } else {
      std::vector<double> x(n * q);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < q; ++k) x[i * q + k] = table_.at(rows[i], features[k]);
      }
      directions = cca_project(x, n, q, labels, params_.ridge).projections;
    }

    CctNode probe;
    probe.features = features;
    std::vector<double> u(n);
    for (auto& w : directions) {
      probe.weights = w;
      for (std::size_t i = 0; i < n; ++i) u[i] = project(probe, table_.row(rows[i]));
      const ThresholdSplit s = best_threshold(u, labels, params_.min_leaf);
      if (s.found && (!best.split.found || s.gain > best.split.gain + 1e-12)) {
        best.split = s;
        best.weights = std::move(w);
      }
    }
    if (best.split.found) best.features = features;
    return best;
  }

  const FeatureTable& table_;
  const CctParams& params_;
  Rng rng_;
  std::size_t lambda_ = 1;
  std::vector<CctNode> nodes_;
};

void validate_training_table(const FeatureTable& table) {
  if (table.empty()) throw DataError("empty training table");
  if (table.n_features() == 0) throw DataError("training table has no features");
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (!is_label(table.label(r))) throw DataError("unlabeled training row");
    if (!table.row_finite(r)) throw DataError("non-finite training row");
  }
}

void check_feature_names(const CcfModel& model, const FeatureTable& table) {
  if (model.feature_names() != table.feature_names()) throw UsageError("feature-name mismatch");
}

}  // namespace

double project(const CctNode& node, std::span<const double> row) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < node.features.size(); ++k) {
    acc += node.weights[k] * row[node.features[k]];
  }
  return acc;
}

ThresholdSplit best_threshold(std::span<const double> values, std::span<const int> labels,
                              std::size_t min_leaf) {
  ThresholdSplit best;
  const std::size_t n = values.size();
  if (n < 2) return best;
  min_leaf = std::max<std::size_t>(min_leaf, 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::array<double, kNumLabels> left{}, right{};
  for (int l : labels) right[l - 1] += 1.0;
  double s_left = 0.0, s_right = 0.0;
  for (double c : right) s_right += xlogx(c);
  const double nd = static_cast<double>(n);
  const double parent = xlogx(nd) - s_right;  // n * H(parent)

  for (std::size_t k = 0; k + 1 < n; ++k) {
    const int c = labels[order[k]] - 1;
    s_left += xlogx(left[c] + 1.0) - xlogx(left[c]);
    s_right += xlogx(right[c] - 1.0) - xlogx(right[c]);
    left[c] += 1.0;
    right[c] -= 1.0;

    const double lo = values[order[k]];
    const double hi = values[order[k + 1]];
    if (!(lo < hi)) continue;
    const std::size_t nl = k + 1;
    if (nl < min_leaf || n - nl < min_leaf) continue;
    const double nld = static_cast<double>(nl);
    const double children = (xlogx(nld) - s_left) + (xlogx(nd - nld) - s_right);
    const double gain = (parent - children) / nd;
    if (gain <= 1e-12) continue;
    if (!best.found || gain > best.gain + 1e-12) {
      double mid = lo + (hi - lo) * 0.5;
      if (!(mid < hi)) mid = lo;
      best = {true, mid, gain, nl};
    }
  }
  return best;
}

const CctNode& CanonicalCorrelationTree::leaf_for(std::span<const double> row) const {
  const CctNode* node = &nodes_.front();
  while (!node->leaf) {
    node = &nodes_[project(*node, row) <= node->threshold ? node->left : node->right];
  }
  return *node;
}

int CanonicalCorrelationTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  // Pre-order storage: children always follow their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].leaf) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

CanonicalCorrelationTree train_cct(const FeatureTable& table, const CctParams& params,
                                   std::uint64_t seed) {
  validate_training_table(table);
  if (params.min_leaf < 1) throw UsageError("min_leaf must be at least 1");
  TreeBuilder builder(table, params, seed);
  return CanonicalCorrelationTree(builder.build());
}

std::vector<std::size_t> trainable_rows(const FeatureTable& table) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (is_label(table.label(r)) && table.row_finite(r)) rows.push_back(r);
  }
  return rows;
}

CcfModel train_ccf(const FeatureTable& table, const CcfParams& params) {
  if (params.n_trees < 1) throw UsageError("n_trees must be at least 1");
  const auto rows = trainable_rows(table);
  if (rows.empty()) throw DataError("no labeled rows with finite features");
  const FeatureTable train = rows.size() == table.n_rows() ? table : table.select_rows(rows);
  validate_training_table(train);

  std::vector<CanonicalCorrelationTree> trees(params.n_trees);
  unsigned threads = params.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : params.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, params.n_trees));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < params.n_trees;) {
      try {
        trees[t] = train_cct(train, params.tree, derive_seed(params.seed, t));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return CcfModel(table.feature_names(), std::move(trees), params.seed);
}

VotesCube::VotesCube(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw UsageError("negative votes cube dimensions");
  const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  votes_.assign(n * kNumLabels, 0.0);
  classified_.assign(n, 0);
}

double VotesCube::total(int i, int j) const noexcept {
  double s = 0.0;
  for (double v : at(i, j)) s += v;
  return s;
}

VotesCube predict_votes(const CcfModel& model, const FeatureTable& table, int rows, int cols) {
  check_feature_names(model, table);
  VotesCube cube(rows, cols);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const PatchCoord pc = table.coord(r);
    if (pc.i < 0 || pc.i >= rows || pc.j < 0 || pc.j >= cols) {
      throw UsageError("feature row outside the votes grid");
    }
    if (!table.row_finite(r)) continue;
    auto v = cube.at(pc.i, pc.j);
    std::fill(v.begin(), v.end(), 0.0);
    for (const auto& tree : model.trees()) v[tree.predict(table.row(r)) - 1] += 1.0;
    cube.set_classified(pc.i, pc.j, true);
  }
  return cube;
}

std::vector<int> predict_labels(const CcfModel& model, const FeatureTable& table) {
  check_feature_names(model, table);
  std::vector<int> out(table.n_rows(), 0);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (!table.row_finite(r)) continue;
    ClassCounts votes{};
    for (const auto& tree : model.trees()) ++votes[tree.predict(table.row(r)) - 1];
    out[r] = majority(votes);
  }
  return out;
}

}  // namespace lcz
