#include <algorithm>

#include "lcz/ccf.hpp"
#include "lcz/error.hpp"
#include "lcz/random.hpp"

namespace lcz {
namespace {

double accuracy(const CcfModel& model, const FeatureTable& table) {
  const auto pred = predict_labels(model, table);
  std::size_t hit = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) hit += pred[r] == table.label(r);
  return static_cast<double>(hit) / static_cast<double>(table.n_rows());
}

}  // namespace

std::vector<FeatureImportance> feature_importance(const FeatureTable& table,
                                                  const CcfParams& params, std::size_t folds,
                                                  std::uint64_t seed) {
  if (folds < 2) throw UsageError("feature importance needs at least 2 folds");
  const auto usable = trainable_rows(table);
  if (usable.size() < folds * 2) throw UsageError("too few labeled rows for cross-validation");

  std::vector<std::size_t> order = usable;
  Rng split_rng(derive_seed(seed, 0x5eed'f01dULL));
  shuffle(std::span<std::size_t>(order), split_rng);

  const std::size_t p = table.n_features();
  std::vector<double> drop(p, 0.0);
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i % folds == k ? test_rows : train_rows).push_back(order[i]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    const FeatureTable train = table.select_rows(train_rows);
    const FeatureTable test = table.select_rows(test_rows);

    CcfParams fold_params = params;
    fold_params.seed = derive_seed(seed ^ params.seed, 1000 + k);
    const CcfModel model = train_ccf(train, fold_params);
    const double base = accuracy(model, test);

    for (std::size_t f = 0; f < p; ++f) {
      FeatureTable shuffled = test;
      std::vector<double> column(test.n_rows());
      for (std::size_t r = 0; r < test.n_rows(); ++r) column[r] = test.at(r, f);
      Rng rng(derive_seed(seed, (k + 1) * 1'000'003ULL + f));
      shuffle(std::span<double>(column), rng);
      for (std::size_t r = 0; r < test.n_rows(); ++r) shuffled.at(r, f) = column[r];
      drop[f] += base - accuracy(model, shuffled);
    }
  }

  std::vector<FeatureImportance> out;
  for (std::size_t f = 0; f < p; ++f) {
    out.push_back({table.feature_names()[f], f, drop[f] / static_cast<double>(folds)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.importance > b.importance; });
  return out;
}

}  // namespace lcz
