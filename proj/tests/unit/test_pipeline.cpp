#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "lcz/error.hpp"
#include "lcz/pipeline.hpp"

using namespace lcz;

namespace {

SynthSpec city(const std::string& severities = "0") {
  KeyValues kv = read_key_values(std::filesystem::path(LCZ_DATA_DIR) / "synthetic_city.txt");
  kv["labels"] = "2:40,3:40,5:40,6:40,8:40,10:40,12:40,14:40";
  kv["acquisition_severity"] = severities;
  return SynthSpec::from_key_values(kv);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LCZ_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool same_raster(const Raster& a, const Raster& b) {
  return a.same_shape(b) && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

}  // namespace

TEST_CASE("train and classify one synthetic city pair") {
  const Scene train = scene_from_synthetic(generate_scene(city(), 1, "train"));
  const Scene test = scene_from_synthetic(generate_scene(city("0,0.5"), 2, "test"));
  PipelineConfig cfg;
  cfg.n_trees = 8;
  const auto art = train_pipeline(std::span(&train, 1), cfg);
  CHECK(art.lu_wn);
  CHECK(art.bu_wn);
  CHECK(art.ranges);
  CHECK(art.build_landuse);

  const auto r = classify_scene(test, art, cfg);
  CHECK(r.per_acquisition.size() == 2);
  CHECK(r.acquisition_ids.size() == 2);
  REQUIRE(r.mask);
  const Raster truth = scene_truth(test);
  CHECK(r.fused.same_shape(truth));
  CHECK(evaluate(r.fused, truth).overall_accuracy() > 0.5);

  SUBCASE("artifacts survive a save/load cycle") {
    test::TempDir dir("artifacts");
    const auto files = save_artifacts(art, dir.path());
    CHECK(std::filesystem::exists(dir / "MANIFEST.txt"));
    CHECK(std::filesystem::exists(dir / "config.txt"));
    const auto back = load_artifacts(dir.path());
    CHECK(same_raster(classify_scene(test, back, cfg).fused, r.fused));
  }
  SUBCASE("runs are deterministic") {
    const auto art2 = train_pipeline(std::span(&train, 1), cfg);
    CHECK(same_raster(classify_scene(test, art2, cfg).fused, r.fused));
  }
  SUBCASE("fusion mode none ignores OSM inputs") {
    PipelineConfig none = cfg;
    none.fusion_mode = FusionMode::none;
    Scene bare = test;
    bare.landuse.reset();
    bare.building.reset();
    bare.points.reset();
    CHECK(same_raster(classify_scene(test, art, none).fused, classify_scene(bare, art, none).fused));
  }
}

TEST_CASE("baseline mode stores only the forest") {
  const Scene train = scene_from_synthetic(generate_scene(city(), 3, "train"));
  PipelineConfig cfg;
  cfg.n_trees = 4;
  cfg.baseline_mode = true;
  const auto art = train_pipeline(std::span(&train, 1), cfg);
  CHECK(art.model.feature_names().size() == 29);
  CHECK_FALSE(art.lu_wn);
  CHECK_FALSE(art.bu_wn);
}

TEST_CASE("fusion without OSM layers is a data error") {
  Scene s = scene_from_synthetic(generate_scene(city(), 4, "s"));
  s.landuse.reset();
  PipelineConfig cfg;
  cfg.n_trees = 2;
  CHECK_THROWS_AS(train_pipeline(std::span(&s, 1), cfg), DataError);
}

TEST_CASE("mask sensitivity gives one point per threshold") {
  const Scene s = scene_from_synthetic(generate_scene(city(), 5, "s"));
  const auto curve = mask_sensitivity(std::span(&s, 1), PipelineConfig{});
  CHECK(curve.size() == 11);
  CHECK(curve.front().threshold == 0.0);
  CHECK(curve.back().threshold == doctest::Approx(1.0));
}

TEST_CASE("command line exit codes") {
  test::TempDir dir("cli");
  const std::string d = dir.path().string();
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("train --fusion-mode sideways " + d + "/none.txt") == 1);
  CHECK(run_cli("train " + d + "/none.txt") == 2);

  std::ofstream(dir / "spec.txt") << "labels=2:0\n";
  CHECK(run_cli("synth --spec " + d + "/spec.txt --out-dir " + d + "/s") != 0);

  const std::string spec = std::string(LCZ_DATA_DIR) + "/synthetic_city.txt";
  REQUIRE(run_cli("synth --spec " + spec + " --seed 1 --out-dir " + d + "/a") == 0);
  REQUIRE(run_cli("synth --spec " + spec + " --seed 2 --out-dir " + d + "/b") == 0);
  REQUIRE(run_cli("train " + d + "/a/manifest.txt --out-dir " + d + "/art") == 0);
  CHECK(std::filesystem::exists(dir / "art/ccf_model.txt"));
  CHECK(std::filesystem::exists(dir / "art/MANIFEST.txt"));
  REQUIRE(run_cli("classify " + d + "/b/manifest.txt --artifacts " + d + "/art --out-dir " + d +
                  "/out --ppm") == 0);
  CHECK(std::filesystem::exists(dir / "out/map_fused.hdr"));
  CHECK(std::filesystem::exists(dir / "out/map_t0.hdr"));
  CHECK(std::filesystem::exists(dir / "out/config.txt"));
  CHECK(run_cli("evaluate --pred " + d + "/out/map_fused.hdr --truth " + d +
                "/b/labels.hdr --out-dir " + d + "/ev") == 0);
  CHECK(std::filesystem::exists(dir / "ev/confusion.csv"));
  CHECK(run_cli("mask-sensitivity " + d + "/a/manifest.txt --out-dir " + d + "/ms") == 0);
  std::ifstream summary(dir / "ms/summary.txt");
  std::string line;
  std::getline(summary, line);
  CHECK(line.rfind("plateau=", 0) == 0);
  CHECK(run_cli("importance " + d + "/a/manifest.txt --folds 3 --out-dir " + d + "/imp") == 0);

  // A corrupted model file is a data error.
  std::ofstream(dir / "art/ccf_model.txt") << "garbage\n";
  CHECK(run_cli("classify " + d + "/b/manifest.txt --artifacts " + d + "/art --out-dir " + d +
                "/out2") == 2);
}
