// Command-line front end for the spatial acoustic projection pipeline.
// Each subcommand is a pure function of (config, input files, seed); see
// README.md for the artifact layout.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sapg/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string split = "train";
  int64_t seed = -1;
  double threshold = -1.0;
  double cell_size = -1.0;
};

sapg::PipelineConfig load_config(const CommonArgs& args) {
  sapg::PipelineConfig cfg = sapg::PipelineConfig::load(args.config_path);
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.threshold > 0.0) cfg.threshold = args.threshold;
  if (args.cell_size > 0.0) {
    // Keep the configured bounds, re-tile them at the requested resolution.
    if (cfg.grid) cfg.grid = cfg.grid_at_cell_size(args.cell_size);
    cfg.cell_size = args.cell_size;
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_split) {
  cmd->add_option("--config", args.config_path, "Pipeline config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "Seed override");
  cmd->add_option("--threshold", args.threshold, "Classifier threshold override");
  cmd->add_option("--cell-size", args.cell_size, "Grid cell size override, meters");
  if (with_split)
    cmd->add_option("--split", args.split, "Frame split: train, eval or all")
        ->check(CLI::IsMember({"train", "eval", "all"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial acoustic projection pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string dataset_dir, mesh_path, grid_path, tsdf_path;
  std::string classifier_path, regressor_path;
  std::vector<double> cell_sizes = {0.2, 0.25, 0.4, 0.6};
  bool export_samples = false;

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  add_common(simulate, args, false);

  CLI::App* build = app.add_subcommand("build", "Integrate feature grid and training TSDF");
  add_common(build, args, true);
  build->add_option("--dataset", dataset_dir, "Dataset directory (default <out>/dataset)");

  CLI::App* train = app.add_subcommand("train", "Train classifier and regressor");
  add_common(train, args, false);
  train->add_option("--grid", grid_path, "Feature grid file (default <out>/grid_train.sapg)");
  train->add_option("--tsdf", tsdf_path, "Training TSDF file (default <out>/tsdf_train.sapg)");
  train->add_flag("--export-samples", export_samples, "Also write samples.sapg");

  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Predict, fuse and mesh");
  add_common(reconstruct, args, false);
  reconstruct->add_option("--grid", grid_path, "Feature grid file (default <out>/grid_eval.sapg)");
  reconstruct->add_option("--classifier", classifier_path, "Classifier checkpoint");
  reconstruct->add_option("--regressor", regressor_path, "Regressor checkpoint");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Point-to-mesh error report");
  add_common(evaluate, args, true);
  evaluate->add_option("--dataset", dataset_dir, "Dataset directory");
  evaluate->add_option("--mesh", mesh_path, "Mesh PLY (default <out>/mesh.ply)");

  CLI::App* sweep = app.add_subcommand("sweep", "Resolution sweep (rebuild + re-mesh per cell size)");
  add_common(sweep, args, true);
  sweep->add_option("--dataset", dataset_dir, "Dataset directory");
  sweep->add_option("--classifier", classifier_path, "Classifier checkpoint");
  sweep->add_option("--regressor", regressor_path, "Regressor checkpoint");
  sweep->add_option("--cell-sizes", cell_sizes, "Cell sizes to sweep, meters");

  CLI11_PARSE(app, argc, argv);

  try {
    const sapg::PipelineConfig cfg = load_config(args);
    const std::string out = cfg.out_dir;
    if (dataset_dir.empty()) dataset_dir = out + "/dataset";

    if (simulate->parsed()) {
      const auto res = sapg::pipeline::cmd_simulate(cfg, out);
      std::printf("dataset: %s (%zu frames)\n", res.dataset_dir.c_str(), res.frame_count);
    } else if (build->parsed()) {
      const auto res = sapg::pipeline::cmd_build(cfg, dataset_dir,
                                                 sapg::split_from_string(args.split), out);
      std::printf("grid: %s (%zu observed cells)\ntsdf: %s (%zu cells)\n",
                  res.grid_path.c_str(), res.observed_cells, res.tsdf_path.c_str(),
                  res.tsdf_cells);
    } else if (train->parsed()) {
      if (grid_path.empty()) grid_path = out + "/grid_train.sapg";
      if (tsdf_path.empty()) tsdf_path = out + "/tsdf_train.sapg";
      const auto res = sapg::pipeline::cmd_train(cfg, grid_path, tsdf_path, out,
                                                 export_samples);
      std::printf("classifier: %s (val accuracy %.4f, %d epochs)\n",
                  res.classifier_path.c_str(), res.classifier_val_accuracy,
                  res.classifier_epochs);
      std::printf("regressor: %s (val mse %.5f, %d epochs)\n", res.regressor_path.c_str(),
                  res.regressor_val_mse, res.regressor_epochs);
    } else if (reconstruct->parsed()) {
      if (grid_path.empty()) grid_path = out + "/grid_eval.sapg";
      if (classifier_path.empty()) classifier_path = out + "/classifier.ckpt";
      if (regressor_path.empty()) regressor_path = out + "/regressor.ckpt";
      const auto res = sapg::pipeline::cmd_reconstruct(cfg, grid_path, classifier_path,
                                                       regressor_path, out);
      std::printf("mesh: %s (%zu triangles, %zu/%zu inlier cells)\n",
                  res.mesh_path.c_str(), res.triangle_count, res.inlier_cells,
                  res.evaluated_cells);
    } else if (evaluate->parsed()) {
      if (mesh_path.empty()) mesh_path = out + "/mesh.ply";
      const auto res = sapg::pipeline::cmd_evaluate(
          cfg, mesh_path, dataset_dir, sapg::split_from_string(args.split), out);
      std::printf("mse: %.6f m^2 over %zu points (coverage %.3f)\nreport: %s\n",
                  res.report.mse, res.report.point_count, res.coverage,
                  res.json_path.c_str());
    } else if (sweep->parsed()) {
      if (classifier_path.empty()) classifier_path = out + "/classifier.ckpt";
      if (regressor_path.empty()) regressor_path = out + "/regressor.ckpt";
      const auto rows = sapg::pipeline::resolution_sweep(
          cfg, dataset_dir, classifier_path, regressor_path, cell_sizes, out,
          sapg::split_from_string(args.split));
      for (const auto& r : rows)
        std::printf("cell %.3f m -> mse %.6f m^2 (%zu triangles)\n", r.cell_size, r.mse,
                    r.triangle_count);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
