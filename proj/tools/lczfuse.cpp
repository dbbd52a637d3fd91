// Command-line front end: train, classify, evaluate, synth, importance,
// mask-sensitivity. Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "lcz/error.hpp"
#include "lcz/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

struct Common {
  std::vector<std::string> manifests;
  std::string config_path;
  std::string out_dir = "run";
  std::optional<std::uint64_t> seed;
  std::string fusion_mode;
  bool baseline = false;
};

void add_common(CLI::App* app, Common& c, bool need_manifests) {
  auto* m = app->add_option("manifests,--manifest", c.manifests, "scene manifest files");
  if (need_manifests) m->required();
  app->add_option("--config", c.config_path, "key=value pipeline config");
  app->add_option("--out-dir", c.out_dir, "output directory");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--fusion-mode", c.fusion_mode, "none|landuse|building|both");
  app->add_flag("--baseline", c.baseline, "stacked-feature baseline");
}

lcz::PipelineConfig resolve_config(const Common& c, lcz::PipelineConfig base) {
  if (!c.config_path.empty()) base = lcz::PipelineConfig::load(c.config_path);
  if (c.seed) base.seed = *c.seed;
  if (!c.fusion_mode.empty()) base.fusion_mode = lcz::parse_fusion_mode(c.fusion_mode);
  if (c.baseline) base.baseline_mode = true;
  base.validate();
  return base;
}

std::vector<lcz::Scene> load_scenes(const std::vector<std::string>& manifests) {
  std::vector<lcz::Scene> scenes;
  for (const auto& m : manifests) scenes.push_back(lcz::load_scene(lcz::SceneManifest::load(m)));
  return scenes;
}

void write_index(const fs::path& dir, const std::vector<fs::path>& files) {
  std::ofstream idx(dir / "MANIFEST.txt");
  for (const auto& f : files) idx << fs::relative(f, dir).string() << '\n';
  if (!idx) throw lcz::DataError("cannot write " + (dir / "MANIFEST.txt").string());
}

int cmd_train(const Common& c) {
  const auto config = resolve_config(c, {});
  const auto scenes = load_scenes(c.manifests);
  const auto artifacts = lcz::train_pipeline(scenes, config);
  const auto files = lcz::save_artifacts(artifacts, c.out_dir);
  std::cout << "trained " << artifacts.model.n_trees() << " trees on "
            << artifacts.model.feature_names().size() << " features; wrote " << files.size()
            << " files to " << c.out_dir << '\n';
  return 0;
}

int cmd_classify(const Common& c, const std::string& artifacts_dir, bool export_ppm) {
  const auto artifacts = lcz::load_artifacts(artifacts_dir);
  const auto config = resolve_config(c, artifacts.config);
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  std::vector<fs::path> files;
  for (const auto& manifest : c.manifests) {
    const auto scene = lcz::load_scene(lcz::SceneManifest::load(manifest));
    const auto result = lcz::classify_scene(scene, artifacts, config);
    const fs::path dir = c.manifests.size() == 1 ? out : out / scene.id;
    fs::create_directories(dir);
    for (std::size_t i = 0; i < result.per_acquisition.size(); ++i) {
      const auto stem = dir / ("map_" + result.acquisition_ids[i]);
      lcz::write_raster(result.per_acquisition[i], stem);
      files.push_back(stem.string() + ".hdr");
    }
    lcz::write_raster(result.fused, dir / "map_fused");
    files.push_back(dir / "map_fused.hdr");
    if (result.mask) {
      lcz::write_raster(*result.mask, dir / "confidence_mask");
      files.push_back(dir / "confidence_mask.hdr");
    }
    if (export_ppm) {
      lcz::write_label_ppm(result.fused, dir / "map_fused.ppm");
      lcz::write_palette(dir / "palette.txt");
      files.push_back(dir / "map_fused.ppm");
      files.push_back(dir / "palette.txt");
    }
    std::ofstream report(dir / "report.txt");
    report << "scene=" << scene.id << '\n'
           << "acquisitions=" << result.per_acquisition.size() << '\n'
           << result.report.to_text();
    if (scene.labels) {
      const auto cm = lcz::evaluate(result.fused, lcz::scene_truth(scene));
      report << cm.metrics_text();
    }
    files.push_back(dir / "report.txt");
    std::cout << scene.id << ": " << result.per_acquisition.size()
              << " acquisition maps + fused map written to " << dir.string() << '\n';
  }
  config.save(out / "config.txt");
  files.push_back(out / "config.txt");
  write_index(out, files);
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& truth, const std::string& out_dir) {
  const auto cm = lcz::evaluate(lcz::read_raster(pred), lcz::read_raster(truth));
  const fs::path out(out_dir);
  fs::create_directories(out);
  cm.write_csv(out / "confusion.csv");
  std::ofstream(out / "metrics.txt") << cm.metrics_text();
  std::ofstream(out / "pa_matrix.txt") << cm.format_percentages(10.0);
  write_index(out, {out / "confusion.csv", out / "metrics.txt", out / "pa_matrix.txt"});
  std::printf("oa=%.4f kappa=%.4f\n", cm.overall_accuracy(), cm.kappa());
  std::cout << cm.format_percentages(10.0);
  return 0;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& scene_id,
              const std::string& out_dir) {
  const auto spec = lcz::SynthSpec::load(spec_path);
  const auto scene = lcz::generate_scene(spec, seed, scene_id);
  const auto manifest = lcz::write_synthetic_scene(scene, out_dir);
  std::cout << "wrote " << manifest.string() << " (" << scene.labels.width() << "x"
            << scene.labels.height() << " patches, " << scene.acquisitions.size()
            << " acquisitions, " << scene.gaps.size() << " gaps)\n";
  return 0;
}

int cmd_importance(const Common& c, std::size_t folds) {
  auto config = resolve_config(c, {});
  config.baseline_mode = true;
  const auto scenes = load_scenes(c.manifests);
  const auto table = lcz::training_table(scenes, config);
  const auto ranked = lcz::feature_importance(table, config.ccf_params(), folds, config.seed);
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  std::ofstream csv(out / "importance.csv");
  csv << "rank,feature,importance\n";
  double top = 0.0;
  for (const auto& f : ranked) top = std::max(top, f.importance);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", ranked[i].importance);
    csv << i + 1 << ',' << ranked[i].feature << ',' << buf << '\n';
    const int bar = top > 0.0 ? static_cast<int>(40.0 * std::max(0.0, ranked[i].importance) / top) : 0;
    std::printf("%3zu %-22s %9s %s\n", i + 1, ranked[i].feature.c_str(), buf,
                std::string(static_cast<std::size_t>(bar), '#').c_str());
  }
  config.save(out / "config.txt");
  write_index(out, {out / "importance.csv", out / "config.txt"});
  return 0;
}

int cmd_mask_sensitivity(const Common& c) {
  const auto config = resolve_config(c, {});
  const auto scenes = load_scenes(c.manifests);
  const auto curve = lcz::mask_sensitivity(scenes, config);
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  lcz::write_sensitivity_csv(curve, out / "sensitivity.csv");
  const auto plateau = lcz::longest_plateau(curve, 0.05);
  std::ofstream summary(out / "summary.txt");
  if (plateau) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "plateau=%.2f..%.2f width=%.2f variation=%.4f\n", plateau->lo,
                  plateau->hi, plateau->hi - plateau->lo, plateau->variation);
    summary << buf;
    std::cout << buf;
  } else {
    summary << "plateau=none\n";
    std::cout << "plateau=none\n";
  }
  config.save(out / "config.txt");
  write_index(out, {out / "sensitivity.csv", out / "summary.txt", out / "config.txt"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lczfuse: local climate zone mapping from satellite bands and OSM layers"};
  app.require_subcommand(1);

  Common train_opts, classify_opts, importance_opts, sensitivity_opts;
  auto* train = app.add_subcommand("train", "train the forest and fusion weight matrices");
  add_common(train, train_opts, true);

  auto* classify = app.add_subcommand("classify", "classify scenes with trained artifacts");
  add_common(classify, classify_opts, true);
  std::string artifacts_dir;
  bool ppm = false;
  classify->add_option("--artifacts", artifacts_dir, "directory written by train")->required();
  classify->add_flag("--ppm", ppm, "also export a color-indexed PPM of the fused map");

  auto* evaluate = app.add_subcommand("evaluate", "score a label map against truth");
  std::string pred, truth, eval_out = "eval";
  evaluate->add_option("--pred", pred, "predicted label raster")->required();
  evaluate->add_option("--truth", truth, "truth label raster")->required();
  evaluate->add_option("--out-dir", eval_out, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::string spec_path, synth_out = "synthetic", scene_id = "synthetic";
  std::uint64_t synth_seed = 0;
  synth->add_option("--spec", spec_path, "generator spec (key=value)")->required();
  synth->add_option("--seed", synth_seed, "layout and noise seed");
  synth->add_option("--scene-id", scene_id, "scene identifier");
  synth->add_option("--out-dir", synth_out, "output directory");

  auto* importance = app.add_subcommand("importance", "permutation feature importance");
  add_common(importance, importance_opts, true);
  std::size_t folds = 5;
  importance->add_option("--folds", folds, "cross-validation folds");

  auto* sensitivity = app.add_subcommand("mask-sensitivity", "confidence-mask threshold sweep");
  add_common(sensitivity, sensitivity_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts);
    if (classify->parsed()) return cmd_classify(classify_opts, artifacts_dir, ppm);
    if (evaluate->parsed()) return cmd_evaluate(pred, truth, eval_out);
    if (synth->parsed()) return cmd_synth(spec_path, synth_seed, scene_id, synth_out);
    if (importance->parsed()) return cmd_importance(importance_opts, folds);
    if (sensitivity->parsed()) return cmd_mask_sensitivity(sensitivity_opts);
  } catch (const lcz::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
