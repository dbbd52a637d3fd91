#include <fstream>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lcz/confidence.hpp"
#include "lcz/error.hpp"

using namespace lcz;

TEST_CASE("building probability per landuse class") {
  Raster lu = Raster::make_u8(10, 20, 5.0, 0);
  Raster bu = Raster::make_u8(10, 20, 5.0, 0);
  for (int i = 0; i < 100; ++i) {
    lu.values()[i] = 4;
    bu.values()[i] = i < 80 ? 1 : 0;
  }
  for (int i = 100; i < 150; ++i) lu.values()[i] = 6;
  bu.values()[190] = 1;  // under landuse 0, ignored
  const LanduseBuildingScene s{&lu, &bu};
  const auto m = train_build_landuse_matrix(std::span(&s, 1));
  CHECK(m.p_build(4) == doctest::Approx(0.8));
  CHECK(m.p_build(6) == 0.0);
  CHECK(m.p_build(9) == 0.0);
  CHECK(m.tallies().count(0) == 0);

  test::TempDir dir("build_lu");
  write_build_landuse(m, dir / "m.csv");
  const auto back = read_build_landuse(dir / "m.csv");
  CHECK(back.p_build(4) == doctest::Approx(0.8));
  CHECK(back.tallies().at(6).total == 50);
}

TEST_CASE("local search flags") {
  BuildLanduseMatrix m;
  m.set(1, {9, 10});
  m.set(2, {0, 10});
  Raster lu = Raster::make_u8(30, 30, 5.0, 0);
  Raster bu = Raster::make_u8(30, 30, 5.0, 0);
  bu.at(10, 10) = 1;
  lu.at(10, 15) = 1;  // 5 px: inside
  lu.at(10, 16) = 1;  // 6 px: outside
  lu.at(15, 15) = 1;  // Chebyshev 5: inside
  lu.at(11, 11) = 2;
  const auto p1 = local_search_confidence(lu, bu, m, 5);
  CHECK(p1.at(10, 15) == doctest::Approx(0.9));
  CHECK(p1.at(10, 16) == doctest::Approx(-0.9));
  CHECK(p1.at(15, 15) == doctest::Approx(0.9));
  CHECK(p1.at(11, 11) == 0.0f);
  CHECK(std::isnan(p1.at(0, 0)));
}

TEST_CASE("surface fraction test is strict") {
  auto patch = [](int ones) {
    Raster b = Raster::make_u8(20, 20, 5.0, 0);
    for (int i = 0; i < ones; ++i) b.values()[i] = 1;
    return surface_fraction_confidence(b).at(0, 0);
  };
  CHECK(patch(45) == 1.0f);
  CHECK(patch(40) == 0.0f);
  CHECK(patch(0) == 0.0f);
}

TEST_CASE("combination and binarization") {
  BuildLanduseMatrix m;
  m.set(1, {9, 10});
  // Patches 0..4: uncovered dense, empty, residential built, empty, residential bare.
  Raster lu = Raster::make_u8(100, 20, 5.0, 0);
  Raster bu = Raster::make_u8(100, 20, 5.0, 0);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      bu.at(y, x) = 1;
      lu.at(y, 40 + x) = 1;
      bu.at(y, 40 + x) = 1;
      lu.at(y, 80 + x) = 1;
    }
  }
  const auto p1 = local_search_confidence(lu, bu, m, 5);
  const auto p2 = surface_fraction_confidence(bu);
  const auto means = combined_confidence(p1, p2, lu);
  CHECK(means.at(0, 0) == doctest::Approx(1.0));
  CHECK(means.at(0, 1) == 0.0f);
  CHECK(means.at(0, 2) == doctest::Approx(0.9));
  CHECK(means.at(0, 4) == doctest::Approx(-0.9));
  const auto mask = combine_and_binarize(p1, p2, lu, 0.8);
  CHECK(mask.at(0, 0) == 1.0f);
  CHECK(mask.at(0, 1) == 0.0f);
  CHECK(mask.at(0, 2) == 1.0f);
  CHECK(mask.at(0, 4) == 0.0f);
  CHECK(confidence_mask(lu, bu, m).values()[2] == 1.0f);
}

TEST_CASE("uncovered policy only matters where the fraction test fails") {
  BuildLanduseMatrix m;
  m.set(1, {10, 10});
  Raster lu = Raster::make_u8(20, 20, 5.0, 0);
  Raster bu = Raster::make_u8(20, 20, 5.0, 0);
  for (int x = 0; x < 20; ++x) {
    lu.at(0, x) = 1;
    bu.at(0, x) = 1;  // 5% built: fraction test fails
  }
  const auto p1 = local_search_confidence(lu, bu, m, 5);
  const auto p2 = surface_fraction_confidence(bu);
  CHECK(combined_confidence(p1, p2, lu, UncoveredPolicy::exclude).at(0, 0) ==
        doctest::Approx(1.0));
  CHECK(combined_confidence(p1, p2, lu, UncoveredPolicy::zero).at(0, 0) ==
        doctest::Approx(0.05));
}

TEST_CASE("adding buildings never removes confidence") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    Raster lu = Raster::make_u8(60, 60, 5.0, 0);
    Raster bu = Raster::make_u8(60, 60, 5.0, 0);
    for (auto& v : lu.values()) v = uniform_index(rng, 3) == 0 ? 0.0f : 1.0f + uniform_index(rng, 2);
    for (auto& v : bu.values()) v = uniform_index(rng, 4) == 0 ? 1.0f : 0.0f;
    BuildLanduseMatrix m;
    m.set(1, {9, 10});
    m.set(2, {3, 10});
    const auto before = confidence_mask(lu, bu, m);
    Raster more = bu;
    for (auto& v : more.values()) {
      if (uniform_index(rng, 5) == 0) v = 1.0f;
    }
    const auto after = confidence_mask(lu, more, m);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before.values()[i] == 1.0f) CHECK(after.values()[i] == 1.0f);
    }
  }
}

TEST_CASE("pearson correlation") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, k{5, 5, 5, 5};
  CHECK(*pearson(a, b) == doctest::Approx(1.0));
  CHECK(*pearson(a, c) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson(a, k));
  const std::vector<double> uniform(34, 1.0 / 17);
  CHECK_FALSE(pearson(uniform, uniform));
}

TEST_CASE("quasi-truth mask follows the label's fraction band") {
  Raster labels = Raster::make_u8(3, 1, 100.0);
  labels.at(0, 0) = 2;   // 40-70%
  labels.at(0, 1) = 2;
  labels.at(0, 2) = 14;  // 0-10%
  Raster bu = Raster::make_u8(60, 20, 5.0, 0);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 10; ++x) bu.at(y, x) = 1;  // 50%
    for (int x = 20; x < 24; ++x) bu.at(y, x) = 1;  // 20%
  }
  const auto q = quasi_truth_mask(bu, labels);
  CHECK(q.at(0, 0) == 1.0f);
  CHECK(q.at(0, 1) == 0.0f);
  CHECK(q.at(0, 2) == 1.0f);
}

TEST_CASE("plateau search and sensitivity CSV") {
  std::vector<SensitivityPoint> curve;
  const double q[11] = {0.5, 0.9, 0.91, 0.92, 0.9, 0.93, 0.92, 0.91, 0.7, 0.6, 0.6};
  for (int t = 0; t <= 10; ++t) curve.push_back({t / 10.0, q[t], 1.0});
  curve[10].corr_all_pass.reset();
  const auto p = longest_plateau(curve, 0.05);
  REQUIRE(p);
  CHECK(p->lo == doctest::Approx(0.1));
  CHECK(p->hi == doctest::Approx(0.7));
  CHECK(p->variation == doctest::Approx(0.03));

  test::TempDir dir("sens");
  write_sensitivity_csv(curve, dir / "s.csv");
  std::ifstream in(dir / "s.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 12);
  CHECK(lines[0] == "threshold,corr_quasi_truth,corr_all_pass");
  CHECK(lines[11].substr(lines[11].size() - 3) == ",NA");
}
