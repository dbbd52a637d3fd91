#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "lcz/ccf.hpp"
#include "lcz/error.hpp"
#include <map>

using namespace lcz;

namespace {

double gauss(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

FeatureTable random_table(std::size_t n, std::size_t p, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t f = 0; f < p; ++f) names.push_back("f" + std::to_string(f));
  FeatureTable t(names);
  std::vector<double> row(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : row) v = uniform01(rng);
    t.add_row({static_cast<int>(r / 50), static_cast<int>(r % 50)}, row,
              1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes))));
  }
  return t;
}

double entropy_of(const std::vector<int>& labels) {
  std::map<int, double> c;
  for (int l : labels) c[l] += 1;
  double h = 0;
  for (auto [l, v] : c) h -= v / labels.size() * std::log(v / labels.size());
  return h;
}

}  // namespace

TEST_CASE("CCA finds a perfectly correlated direction") {
  // Label is a deterministic function of x0 - x1; x2 is noise.
  Rng rng(1);
  const std::size_t n = 200, p = 3;
  std::vector<double> x(n * p);
  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    labels[r] = r % 2 == 0 ? 3 : 7;
    const double s = labels[r] == 3 ? -1.0 : 1.0;
    const double a = gauss(rng);
    x[r * p + 0] = a + s;
    x[r * p + 1] = a;
    x[r * p + 2] = gauss(rng);
  }
  const auto res = cca_project(x, n, p, labels);
  REQUIRE(res.correlations.size() == 1);
  CHECK(res.correlations[0] == doctest::Approx(1.0).epsilon(1e-9));
  const auto& w = res.projections[0];
  double norm = 0;
  for (double v : w) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
  CHECK(w[0] == doctest::Approx(-w[1]).epsilon(1e-6));
  CHECK(std::abs(w[2]) < 1e-6);
}

TEST_CASE("CCA with a single feature returns the unit axis") {
  std::vector<double> x{0.1, 0.4, 0.2, 0.9, 0.8};
  std::vector<int> labels{1, 1, 1, 2, 2};
  const auto res = cca_project(x, 5, 1, labels);
  REQUIRE(res.projections.size() == 1);
  CHECK(std::abs(res.projections[0][0]) == doctest::Approx(1.0));
  CHECK(res.correlations[0] > 0.8);
}

TEST_CASE("CCA on independent noise has weak correlation") {
  Rng rng(77);
  const std::size_t n = 1000, p = 4;
  std::vector<double> x(n * p);
  std::vector<int> labels(n);
  for (auto& v : x) v = gauss(rng);
  for (auto& l : labels) l = 1 + static_cast<int>(uniform_index(rng, 2));
  const auto res = cca_project(x, n, p, labels);
  CHECK(res.correlations[0] < 0.15);
}

TEST_CASE("CCA correlations are sorted and bounded") {
  const auto t = random_table(300, 5, 4, 8);
  std::vector<double> x;
  std::vector<int> labels;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    x.insert(x.end(), t.row(r).begin(), t.row(r).end());
    labels.push_back(t.label(r));
  }
  const auto res = cca_project(x, t.n_rows(), t.n_features(), labels);
  CHECK(res.correlations.size() == 3);
  for (std::size_t k = 0; k < res.correlations.size(); ++k) {
    CHECK(res.correlations[k] >= 0.0);
    CHECK(res.correlations[k] <= 1.0 + 1e-12);
    if (k > 0) CHECK(res.correlations[k] <= res.correlations[k - 1]);
  }
}

TEST_CASE("CCA rejects a single class") {
  std::vector<double> x{1, 2, 3};
  std::vector<int> labels{4, 4, 4};
  CHECK_THROWS(cca_project(x, 3, 1, labels));
}

TEST_CASE("best threshold agrees with exhaustive scoring") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 28);
    const std::size_t min_leaf = 1 + uniform_index(rng, 3);
    std::vector<double> v(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = static_cast<double>(uniform_index(rng, 12));  // ties on purpose
      l[i] = 1 + static_cast<int>(uniform_index(rng, 3));
    }
    double best = 0.0;
    for (double t : v) {
      std::vector<int> a, b;
      for (std::size_t i = 0; i < n; ++i) (v[i] <= t ? a : b).push_back(l[i]);
      if (a.size() < min_leaf || b.size() < min_leaf) continue;
      const double g = entropy_of(l) - a.size() / double(n) * entropy_of(a) -
                       b.size() / double(n) * entropy_of(b);
      best = std::max(best, g);
    }
    const auto s = best_threshold(v, l, min_leaf);
    if (best <= 1e-12) {
      CHECK_FALSE(s.found);
      continue;
    }
    REQUIRE(s.found);
    CHECK(s.gain == doctest::Approx(best).epsilon(1e-9));
    std::size_t left = 0;
    for (double x : v) left += x <= s.threshold;
    CHECK(left == s.n_left);
    CHECK(left >= min_leaf);
    CHECK(n - left >= min_leaf);
  }
}

TEST_CASE("depth-1 tree is a stump on the separating axis") {
  FeatureTable t({"a"});
  for (int i = 0; i < 10; ++i) {
    const double v = i;
    t.add_row({0, i}, std::span(&v, 1), i < 4 ? 2 : 5);
  }
  CctParams p;
  p.max_depth = 1;
  const auto tree = train_cct(t, p, 1);
  CHECK(tree.depth() == 1);
  CHECK(tree.nodes().size() == 3);
  const double lo = 1.0, hi = 8.0;
  CHECK(tree.predict(std::span(&lo, 1)) == 2);
  CHECK(tree.predict(std::span(&hi, 1)) == 5);
}

TEST_CASE("pure node becomes a leaf with its label") {
  FeatureTable t({"a", "b"});
  for (int i = 0; i < 5; ++i) {
    const double row[2] = {double(i), double(i * i)};
    t.add_row({0, i}, row, 9);
  }
  const auto tree = train_cct(t, {}, 3);
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.root().label == 9);
  CHECK(tree.root().counts[8] == 5);
}

TEST_CASE("unlimited trees fit generic training data exactly") {
  const auto t = random_table(150, 4, 5, 21);
  const auto tree = train_cct(t, {}, 4);
  for (std::size_t r = 0; r < t.n_rows(); ++r) CHECK(tree.predict(t.row(r)) == t.label(r));
}

TEST_CASE("child counts partition the parent counts") {
  const auto t = random_table(200, 3, 4, 31);
  const auto tree = train_cct(t, {}, 2);
  for (const auto& node : tree.nodes()) {
    if (node.leaf) continue;
    const auto& l = tree.nodes()[node.left].counts;
    const auto& r = tree.nodes()[node.right].counts;
    for (int k = 0; k < kNumLabels; ++k) CHECK(node.counts[k] == l[k] + r[k]);
  }
}

TEST_CASE("oblique forest handles rotated classes") {
  auto make = [](std::uint64_t seed) {
    Rng rng(seed);
    FeatureTable t({"x", "y"});
    const double c = std::cos(M_PI / 4), s = std::sin(M_PI / 4);
    for (int k = 0; k < 200; ++k) {
      const int label = k % 2 ? 1 : 2;
      const double along = (label == 1 ? -1.0 : 1.0) + 0.35 * gauss(rng);
      const double across = 3.0 * gauss(rng);
      const double row[2] = {c * along - s * across, s * along + c * across};
      t.add_row({0, k}, row, label);
    }
    return t;
  };
  const auto train = make(1), test = make(2);
  CcfParams p;
  p.seed = 3;
  const auto m = train_ccf(train, p);
  const auto pred = predict_labels(m, test);
  std::size_t ok = 0;
  for (std::size_t r = 0; r < test.n_rows(); ++r) ok += pred[r] == test.label(r);
  CHECK(ok / 200.0 >= 0.95);
}

TEST_CASE("votes sum to the tree count and non-finite rows stay unclassified") {
  auto t = random_table(100, 3, 3, 41);
  CcfParams p;
  p.n_trees = 20;
  const auto m = train_ccf(t, p);
  FeatureTable q = t;
  q.at(7, 1) = std::nan("");
  const auto votes = predict_votes(m, q, 2, 50);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 50; ++j) {
      const bool bad = i * 50 + j == 7;
      CHECK(votes.classified(i, j) == !bad);
      CHECK(votes.total(i, j) == (bad ? 0.0 : 20.0));
    }
  }
  CHECK(predict_labels(m, q)[7] == 0);
}

TEST_CASE("forest training is deterministic and thread-count independent") {
  const auto t = random_table(200, 5, 4, 51);
  CcfParams p;
  p.seed = 99;
  test::TempDir dir("ccf_det");
  write_ccf(train_ccf(t, p), dir / "a.txt");
  write_ccf(train_ccf(t, p), dir / "b.txt");
  p.threads = 4;
  write_ccf(train_ccf(t, p), dir / "c.txt");
  auto slurp = [](const std::filesystem::path& f) {
    std::ifstream in(f);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));
  CHECK(slurp(dir / "a.txt") == slurp(dir / "c.txt"));
  p.seed = 100;
  p.threads = 1;
  write_ccf(train_ccf(t, p), dir / "d.txt");
  CHECK(slurp(dir / "a.txt") != slurp(dir / "d.txt"));
}

TEST_CASE("model files round trip exactly") {
  const auto t = random_table(120, 4, 3, 61);
  CcfParams p;
  p.n_trees = 5;
  const auto m = train_ccf(t, p);
  test::TempDir dir("ccf_io");
  write_ccf(m, dir / "m.txt");
  const auto back = read_ccf(dir / "m.txt");
  CHECK(back.feature_names() == m.feature_names());
  CHECK(back.n_trees() == 5);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(&back.trees()[k].leaf_for(t.row(r)) - back.trees()[k].nodes().data() ==
            &m.trees()[k].leaf_for(t.row(r)) - m.trees()[k].nodes().data());
    }
  }
}

TEST_CASE("malformed model files are data errors") {
  test::TempDir dir("ccf_bad");
  std::ofstream(dir / "bad.txt") << "lczfuse-ccf-model 1\nseed x\n";
  CHECK_THROWS_AS(read_ccf(dir / "bad.txt"), DataError);
  std::ofstream(dir / "other.txt") << "not a model\n";
  CHECK_THROWS_AS(read_ccf(dir / "other.txt"), DataError);
}

TEST_CASE("prediction checks feature names") {
  const auto t = random_table(60, 2, 2, 71);
  const auto m = train_ccf(t, {});
  FeatureTable other({"f0", "zz"});
  const double row[2] = {0.1, 0.2};
  other.add_row({0, 0}, row);
  CHECK_THROWS_AS(predict_votes(m, other, 1, 1), UsageError);
}

TEST_CASE("permutation importance ranks a leaked label first") {
  Rng rng(3);
  FeatureTable t({"noise", "constant", "leak"});
  for (int r = 0; r < 200; ++r) {
    const int label = 1 + static_cast<int>(uniform_index(rng, 3));
    const double row[3] = {uniform01(rng), 4.0, static_cast<double>(label)};
    t.add_row({r / 20, r % 20}, row, label);
  }
  CcfParams p;
  p.n_trees = 10;
  const auto ranked = feature_importance(t, p, 5, 1);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked.front().feature == "leak");
  for (const auto& f : ranked) {
    if (f.feature == "constant") CHECK(f.importance == 0.0);
  }
  const auto again = feature_importance(t, p, 5, 1);
  for (std::size_t k = 0; k < 3; ++k) CHECK(again[k].importance == ranked[k].importance);
  CHECK_THROWS_AS(feature_importance(t, p, 1, 1), UsageError);
}
