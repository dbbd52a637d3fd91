#include <fstream>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "lcz/error.hpp"
#include "lcz/synth.hpp"

using namespace lcz;

namespace {

KeyValues small_spec() {
  return {
      {"bands", "blue,green,red,nir,swir"},
      {"roles", "blue:blue,green:green,red:red,nir:nir,swir:swir"},
      {"labels", "2:50,6:50,12:50,14:50"},
      {"endmember.vegetation", "0.04,0.08,0.05,0.45,0.20"},
      {"endmember.impervious", "0.12,0.14,0.16,0.22,0.26"},
      {"endmember.soil", "0.10,0.14,0.20,0.28,0.35"},
      {"endmember.water", "0.06,0.07,0.05,0.02,0.01"},
      {"endmember.roof", "0.18,0.19,0.20,0.24,0.28"},
      {"ground.2", "0.15,0.75,0.10,0"},
      {"ground.6", "0.45,0.45,0.10,0"},
      {"ground.12", "0.75,0.05,0.20,0"},
      {"ground.14", "0.70,0.03,0.27,0"},
      {"buildings.2", "7,9"},
      {"buildings.6", "20,25"},
      {"landuse.2", "1:1"},
      {"landuse.6", "1:0.5,7:0.5"},
      {"landuse.12", "4:1"},
      {"acquisition_severity", "0,1"},
      {"acq_noise", "0.05"},
      {"gap_fraction", "0.2"},
  };
}

}  // namespace

TEST_CASE("generated labels have exactly the requested counts") {
  const auto spec = SynthSpec::from_key_values(small_spec());
  const auto s = generate_scene(spec, 3);
  std::map<int, int> counts;
  int unlabeled = 0;
  for (float v : s.labels.values()) {
    if (s.labels.is_nodata(v)) {
      ++unlabeled;
    } else {
      ++counts[static_cast<int>(v)];
    }
  }
  CHECK(counts == std::map<int, int>{{2, 50}, {6, 50}, {12, 50}, {14, 50}});
  CHECK(unlabeled == s.labels.width() * s.labels.height() - 200);
  CHECK(s.landuse.pixel_size() == 5.0);
  CHECK(s.landuse.width() == s.labels.width() * 20);
  CHECK(s.acquisitions.size() == 2);
  CHECK(s.acquisitions[0].stack.bands.front().raster.width() == s.labels.width() * 10);
}

// Placement retries a bounded number of times; the shipped spec is loose
// enough that every patch lands inside its band.
TEST_CASE("building fractions respect the class bands") {
  const auto spec = SynthSpec::load(std::filesystem::path(LCZ_DATA_DIR) / "synthetic_city.txt");
  const auto s = generate_scene(spec, 5);
  int inside = 0, total = 0;
  for (int i = 0; i < s.labels.height(); ++i) {
    for (int j = 0; j < s.labels.width(); ++j) {
      const float l = s.labels.at(i, j);
      if (s.labels.is_nodata(l)) continue;
      int ones = 0;
      for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) ones += s.building_true.at(i * 20 + y, j * 20 + x) != 0.0f;
      }
      const auto band = surface_fraction_band(static_cast<int>(l));
      const double f = 100.0 * ones / 400.0;
      ++total;
      const bool ok = f <= band.hi + 1e-9 && (band.lo > 0 ? f > band.lo : true);
      inside += ok;
    }
  }
  CHECK(total == spec.total_patches());
  CHECK(inside == total);
}

TEST_CASE("gap rectangles are zeroed in the mapped layer only") {
  const auto spec = SynthSpec::from_key_values(small_spec());
  const auto s = generate_scene(spec, 7);
  REQUIRE_FALSE(s.gaps.empty());
  for (const auto& g : s.gaps) {
    int true_ones = 0;
    for (int y = g.row0; y < g.row0 + g.rows; ++y) {
      for (int x = g.col0; x < g.col0 + g.cols; ++x) {
        CHECK(s.building.at(y, x) == 0.0f);
        true_ones += s.building_true.at(y, x) != 0.0f;
      }
    }
    CHECK(true_ones > 0);
    for (const auto& p : s.points) {
      const bool in = p.x_m >= g.col0 * 5.0 && p.x_m < (g.col0 + g.cols) * 5.0 &&
                      p.y_m >= g.row0 * 5.0 && p.y_m < (g.row0 + g.rows) * 5.0;
      CHECK_FALSE(in);
    }
  }
  std::size_t differing = 0;
  for (std::size_t k = 0; k < s.building.size(); ++k) {
    differing += s.building.values()[k] != s.building_true.values()[k];
  }
  CHECK(differing > 0);
}

TEST_CASE("same seed gives bit-identical files") {
  const auto spec = SynthSpec::from_key_values(small_spec());
  test::TempDir a("synth_a"), b("synth_b");
  write_synthetic_scene(generate_scene(spec, 11, "x"), a.path());
  write_synthetic_scene(generate_scene(spec, 11, "x"), b.path());
  auto slurp = [](const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    ++files;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename().string()));
  }
  CHECK(files > 10);
  const auto other = generate_scene(spec, 12, "x");
  CHECK_FALSE(std::equal(other.labels.values().begin(), other.labels.values().end(),
                         generate_scene(spec, 11, "x").labels.values().begin()));
}

TEST_CASE("spec errors") {
  auto kv = small_spec();
  kv["labels"] = "2:0";
  CHECK_THROWS_AS(SynthSpec::from_key_values(kv), DataError);
  kv = small_spec();
  kv["mystery"] = "1";
  CHECK_THROWS_AS(SynthSpec::from_key_values(kv), UsageError);
  kv = small_spec();
  kv.erase("ground.14");
  CHECK_THROWS_AS(SynthSpec::from_key_values(kv), UsageError);
}
