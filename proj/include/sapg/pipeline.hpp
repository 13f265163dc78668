#pragma once

#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sapg/config.hpp"
#include "sapg/container.hpp"
#include "sapg/dataset.hpp"
#include "sapg/eval.hpp"
#include "sapg/feature_grid.hpp"
#include "sapg/nn_models.hpp"
#include "sapg/nn_train.hpp"
#include "sapg/reconstruction.hpp"
#include "sapg/trajectory.hpp"
#include "sapg/tsdf.hpp"

namespace sapg::pipeline {

namespace fs = std::filesystem;

inline void write_text(const std::string& path, const std::string& text) {
  auto os = io::open_out(path);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw std::runtime_error("failed writing " + path);
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// ---- simulate ----

struct SimulateResult {
  std::string dataset_dir;
  size_t frame_count = 0;
};

inline SimulateResult cmd_simulate(const PipelineConfig& cfg,
                                   const std::string& out_dir) {
  cfg.validate();
  const Scene scene = cfg.scene();
  const SonarConfig sonar = cfg.sonar_with_step();
  const DvlConfig dvl = cfg.dvl();
  const auto poses = generate_trajectory(cfg.trajectory);
  const Pose mount = sonar_mount(cfg.trajectory.mount_pitch);

  const std::string dir = out_dir + "/dataset";
  fs::create_directories(dir + "/frames");

  Dataset ds;
  ds.dir = dir;
  const uint64_t noise_base = Rng::derive(cfg.seed, "sonar-noise");
  for (size_t i = 0; i < poses.size(); ++i) {
    const Pose sonar_pose = poses[i].pose.compose(mount);
    uint64_t x = noise_base + i;
    const SonarImage img =
        simulate_sonar(scene, sonar_pose, sonar, Rng::splitmix64(x), poses[i].time);
    DatasetFrame f;
    f.time = poses[i].time;
    f.pose = poses[i].pose;
    f.dvl = simulate_dvl(scene, poses[i].pose, dvl);
    f.frame_file = io::frame_file_name(i);
    io::save_sonar_frame(img, dir + "/" + f.frame_file);
    ds.frames.push_back(std::move(f));
  }

  ds.manifest["seed"] = cfg.seed;
  ds.manifest["config_hash"] = cfg.hash();
  ds.manifest["frame_count"] = ds.frames.size();
  ds.manifest["mount_pitch_deg"] = detail::deg(cfg.trajectory.mount_pitch);
  io::save_dataset_index(ds);
  return SimulateResult{dir, ds.frames.size()};
}

// ---- build ----

struct BuildResult {
  std::string grid_path;
  std::string tsdf_path;
  size_t frames_used = 0;
  size_t observed_cells = 0;
  size_t tsdf_cells = 0;  // cells with any TSDF evidence
};

inline BuildResult cmd_build(const PipelineConfig& cfg, const std::string& dataset_dir,
                             Split split, const std::string& out_dir,
                             const GridSpec* grid_override = nullptr) {
  cfg.validate();
  const Dataset ds = io::load_dataset(dataset_dir);
  const GridSpec spec = grid_override ? *grid_override : cfg.resolved_grid();
  const auto [lo, hi] = split_range(ds.frames.size(), split);
  const Pose mount = sonar_mount(cfg.trajectory.mount_pitch);
  const DvlConfig dvl = cfg.dvl();

  FeatureGrid grid(spec, cfg.n);
  TsdfGrid tsdf(spec, cfg.tau);
  for (size_t i = lo; i < hi; ++i) {
    const DatasetFrame& f = ds.frames[i];
    const SonarImage img = ds.load_frame(i);
    grid.integrate_frame(img, f.pose.compose(mount));
    for (int b = 0; b < 4; ++b) {
      if (!f.dvl[b]) continue;
      const Vec3 dir = f.pose.rotation * dvl.beam_directions[b];
      integrate_range_beam(tsdf, f.pose.translation, dir, *f.dvl[b], dvl.opening_angle);
    }
  }
  sobel_gradients(tsdf);

  fs::create_directories(out_dir);
  BuildResult res;
  res.grid_path = out_dir + "/grid_" + split_name(split) + ".sapg";
  res.tsdf_path = out_dir + "/tsdf_" + split_name(split) + ".sapg";
  res.frames_used = hi - lo;
  res.observed_cells = grid.observed_cells();
  for (size_t c = 0; c < spec.cell_count(); ++c)
    if (tsdf.weight(c) > 0.0) ++res.tsdf_cells;
  io::save_feature_grid(grid, res.grid_path);
  io::save_tsdf(tsdf, res.tsdf_path);

  nlohmann::json summary;
  summary["split"] = split_name(split);
  summary["frames_used"] = res.frames_used;
  summary["observed_cells"] = res.observed_cells;
  summary["tsdf_cells"] = res.tsdf_cells;
  summary["config_hash"] = cfg.hash();
  write_text(out_dir + "/build_" + split_name(split) + ".json", summary.dump(1) + "\n");
  return res;
}

// ---- train ----

struct TrainCmdResult {
  std::string classifier_path;
  std::string regressor_path;
  size_t samples = 0;
  size_t positives = 0;
  size_t regression_samples = 0;
  double classifier_val_accuracy = 0.0;
  double classifier_val_loss = 0.0;
  double regressor_val_mse = 0.0;
  double regressor_val_loss = 0.0;
  int classifier_epochs = 0;
  int regressor_epochs = 0;
};

inline void write_history_csv(const std::string& path,
                              const std::vector<nn::EpochStats>& history,
                              bool classification) {
  std::string csv = classification ? "epoch,train_loss,val_loss,val_accuracy\n"
                                   : "epoch,train_loss,val_loss,val_mse\n";
  for (const auto& e : history) {
    csv += std::to_string(e.epoch) + "," + fmt_double(e.train_loss) + "," +
           fmt_double(e.val_loss) + "," +
           fmt_double(classification ? e.val_accuracy : e.val_mse) + "\n";
  }
  write_text(path, csv);
}

inline TrainCmdResult cmd_train(const PipelineConfig& cfg, const std::string& grid_path,
                                const std::string& tsdf_path, const std::string& out_dir,
                                bool export_samples = false) {
  cfg.validate();
  const FeatureGrid grid = io::load_feature_grid(grid_path);
  const TsdfGrid tsdf = io::load_tsdf(tsdf_path);
  const SampleSet samples = make_samples(tsdf, grid);
  fs::create_directories(out_dir);
  if (export_samples) io::save_samples(samples, out_dir + "/samples.sapg");

  TrainCmdResult res;
  res.samples = samples.count;
  res.positives = samples.positives();
  for (uint8_t h : samples.has_reg) res.regression_samples += h;
  if (res.positives < 100) {
    throw std::runtime_error(
        "cmd_train: insufficient positive samples (need >= 100): total=" +
        std::to_string(samples.count) + " positives=" + std::to_string(res.positives) +
        " regression=" + std::to_string(res.regression_samples));
  }

  const size_t width = static_cast<size_t>(3) * samples.n;

  // Classifier: all samples, boolean target.
  std::vector<double> cls_targets(samples.count);
  std::vector<nn::DataView> cls_data(samples.count);
  for (size_t i = 0; i < samples.count; ++i) {
    cls_targets[i] = samples.label[i] ? 1.0 : 0.0;
    cls_data[i] = nn::DataView{&samples.features[i * width], &cls_targets[i]};
  }
  nn::Model classifier = nn::build_classifier(samples.n);
  classifier.init_params(Rng::derive(cfg.seed, "init-classifier"));
  nn::TrainConfig ccfg = cfg.train;
  ccfg.rng_seed = Rng::derive(cfg.seed, "train-classifier");
  const nn::TrainResult ctr =
      nn::train(std::move(classifier), cls_data, ccfg, nn::LossKind::BinaryCrossEntropy);

  // Regressor: only samples with targets.
  std::vector<nn::DataView> reg_data;
  for (size_t i = 0; i < samples.count; ++i)
    if (samples.has_reg[i])
      reg_data.push_back(nn::DataView{&samples.features[i * width], &samples.reg[i * 3]});
  nn::Model regressor = nn::build_regressor(samples.n);
  regressor.init_params(Rng::derive(cfg.seed, "init-regressor"));
  nn::TrainConfig rcfg = cfg.train;
  rcfg.rng_seed = Rng::derive(cfg.seed, "train-regressor");
  const nn::TrainResult rtr =
      nn::train(std::move(regressor), reg_data, rcfg, nn::LossKind::LogCosh);

  const nn::EpochStats& cbest = ctr.history[ctr.best_epoch - 1];
  const nn::EpochStats& rbest = rtr.history[rtr.best_epoch - 1];
  res.classifier_val_accuracy = cbest.val_accuracy;
  res.classifier_val_loss = cbest.val_loss;
  res.regressor_val_mse = rbest.val_mse;
  res.regressor_val_loss = rbest.val_loss;
  res.classifier_epochs = static_cast<int>(ctr.history.size());
  res.regressor_epochs = static_cast<int>(rtr.history.size());

  res.classifier_path = out_dir + "/classifier.ckpt";
  res.regressor_path = out_dir + "/regressor.ckpt";
  nlohmann::json cmeta, rmeta;
  cmeta["n"] = samples.n;
  cmeta["seed"] = cfg.seed;
  cmeta["best_epoch"] = ctr.best_epoch;
  cmeta["val_loss"] = cbest.val_loss;
  cmeta["val_accuracy"] = cbest.val_accuracy;
  rmeta["n"] = samples.n;
  rmeta["seed"] = cfg.seed;
  rmeta["best_epoch"] = rtr.best_epoch;
  rmeta["val_loss"] = rbest.val_loss;
  rmeta["val_mse"] = rbest.val_mse;
  io::save_model(ctr.model, cmeta, res.classifier_path);
  io::save_model(rtr.model, rmeta, res.regressor_path);
  write_history_csv(out_dir + "/history_classifier.csv", ctr.history, true);
  write_history_csv(out_dir + "/history_regressor.csv", rtr.history, false);

  nlohmann::json summary;
  summary["samples"] = res.samples;
  summary["positives"] = res.positives;
  summary["regression_samples"] = res.regression_samples;
  summary["classifier"] = cmeta;
  summary["regressor"] = rmeta;
  summary["classifier_params"] = ctr.model.param_count();
  summary["regressor_params"] = rtr.model.param_count();
  write_text(out_dir + "/train.json", summary.dump(1) + "\n");
  return res;
}

// ---- reconstruct ----

struct ReconstructResult {
  std::string mesh_path;
  std::string tsdf_path;
  size_t evaluated_cells = 0;
  size_t inlier_cells = 0;
  size_t triangle_count = 0;
  size_t vertex_count = 0;
};

inline TriangleMesh reconstruct_mesh(const FeatureGrid& grid, const nn::Model& classifier,
                                     const nn::Model& regressor, double threshold,
                                     double tau, PredictStats* stats = nullptr,
                                     TsdfGrid* tsdf_out = nullptr) {
  const auto preds = predict_cells(grid, classifier, regressor, threshold, tau, stats);
  TsdfGrid tsdf(grid.spec(), tau);
  for (const auto& p : preds) {
    if (!p.inlier) continue;
    fuse_prediction(tsdf, grid.spec().cell_center(grid.spec().unlinear(p.cell)), p.d,
                    p.n_hat, tau);
  }
  TriangleMesh mesh = marching_cubes(tsdf);
  if (tsdf_out) *tsdf_out = std::move(tsdf);
  return mesh;
}

inline ReconstructResult cmd_reconstruct(const PipelineConfig& cfg,
                                         const std::string& grid_path,
                                         const std::string& classifier_path,
                                         const std::string& regressor_path,
                                         const std::string& out_dir) {
  cfg.validate();
  const FeatureGrid grid = io::load_feature_grid(grid_path);
  const auto cls = io::load_model(classifier_path);
  const auto reg = io::load_model(regressor_path);
  if (cls.model.input_len() != 3 * grid.n() || reg.model.input_len() != 3 * grid.n())
    throw std::invalid_argument("cmd_reconstruct: checkpoint n does not match grid n");

  PredictStats stats;
  TsdfGrid tsdf;
  const TriangleMesh mesh = reconstruct_mesh(grid, cls.model, reg.model, cfg.threshold,
                                             cfg.tau, &stats, &tsdf);

  fs::create_directories(out_dir);
  ReconstructResult res;
  res.mesh_path = out_dir + "/mesh.ply";
  res.tsdf_path = out_dir + "/recon_tsdf.sapg";
  res.evaluated_cells = stats.evaluated;
  res.inlier_cells = stats.inliers;
  res.triangle_count = mesh.triangles.size();
  res.vertex_count = mesh.vertices.size();
  export_ply(mesh, res.mesh_path);
  io::save_tsdf(tsdf, res.tsdf_path);

  nlohmann::json summary;
  summary["evaluated_cells"] = stats.evaluated;
  summary["inlier_cells"] = stats.inliers;
  summary["clamped_distance"] = stats.clamped_distance;
  summary["clamped_delta"] = stats.clamped_delta;
  summary["triangle_count"] = res.triangle_count;
  summary["vertex_count"] = res.vertex_count;
  summary["threshold"] = cfg.threshold;
  write_text(out_dir + "/reconstruct.json", summary.dump(1) + "\n");
  return res;
}

// ---- evaluate ----

// Ground truth points are the DVL beam endpoints of the chosen split.
inline std::vector<Vec3> dvl_endpoints(const PipelineConfig& cfg, const Dataset& ds,
                                       Split split) {
  const DvlConfig dvl = cfg.dvl();
  const auto [lo, hi] = split_range(ds.frames.size(), split);
  std::vector<Vec3> points;
  for (size_t i = lo; i < hi; ++i) {
    const DatasetFrame& f = ds.frames[i];
    for (int b = 0; b < 4; ++b)
      if (f.dvl[b])
        points.push_back(f.pose.translation +
                         *f.dvl[b] * (f.pose.rotation * dvl.beam_directions[b]));
  }
  return points;
}

// Fraction of 2D footprint bins holding ground-truth points that also hold
// at least one mesh vertex.
inline double footprint_coverage(const TriangleMesh& mesh, const std::vector<Vec3>& points,
                                 double bin = 0.5) {
  if (points.empty()) return 0.0;
  auto key = [bin](const Vec3& p) {
    return std::make_pair(static_cast<int64_t>(std::floor(p.x() / bin)),
                          static_cast<int64_t>(std::floor(p.y() / bin)));
  };
  std::set<std::pair<int64_t, int64_t>> footprint, covered;
  for (const auto& p : points) footprint.insert(key(p));
  for (const auto& v : mesh.vertices) covered.insert(key(v));
  size_t hit = 0;
  for (const auto& k : footprint) hit += covered.count(k);
  return static_cast<double>(hit) / static_cast<double>(footprint.size());
}

struct EvaluateResult {
  EvalReport report;
  double coverage = 0.0;
  std::string json_path;
  std::string csv_path;
};

inline EvaluateResult cmd_evaluate(const PipelineConfig& cfg, const std::string& mesh_path,
                                   const std::string& dataset_dir, Split split,
                                   const std::string& out_dir) {
  cfg.validate();
  const TriangleMesh mesh = import_ply(mesh_path);
  if (mesh.triangles.empty()) throw std::domain_error("cmd_evaluate: empty mesh");
  const Dataset ds = io::load_dataset(dataset_dir);
  const std::vector<Vec3> points = dvl_endpoints(cfg, ds, split);

  EvaluateResult res;
  res.report = evaluate(mesh, points, cfg.cell_size);
  res.coverage = footprint_coverage(mesh, points);

  fs::create_directories(out_dir);
  res.json_path = out_dir + "/eval_" + split_name(split) + ".json";
  res.csv_path = out_dir + "/eval_" + split_name(split) + ".csv";
  nlohmann::json j = res.report.to_json();
  j["coverage"] = res.coverage;
  j["split"] = split_name(split);
  write_text(res.json_path, j.dump(1) + "\n");

  std::string csv = "index,x,y,z,distance\n";
  for (size_t i = 0; i < points.size(); ++i)
    csv += std::to_string(i) + "," + fmt_double(points[i].x()) + "," +
           fmt_double(points[i].y()) + "," + fmt_double(points[i].z()) + "," +
           fmt_double(res.report.distances[i]) + "\n";
  write_text(res.csv_path, csv);
  return res;
}

// ---- resolution sweep ----

struct SweepRow {
  double cell_size = 0.0;
  double mse = 0.0;
  size_t triangle_count = 0;
  size_t point_count = 0;
};

// Re-grids the evaluation split at each resolution, re-runs prediction and
// meshing with the same trained models, and re-evaluates.
inline std::vector<SweepRow> resolution_sweep(const PipelineConfig& cfg,
                                              const std::string& dataset_dir,
                                              const std::string& classifier_path,
                                              const std::string& regressor_path,
                                              const std::vector<double>& cell_sizes,
                                              const std::string& out_dir,
                                              Split split = Split::Eval) {
  cfg.validate();
  const Dataset ds = io::load_dataset(dataset_dir);
  const auto cls = io::load_model(classifier_path);
  const auto reg = io::load_model(regressor_path);
  const Pose mount = sonar_mount(cfg.trajectory.mount_pitch);
  const auto [lo, hi] = split_range(ds.frames.size(), split);
  const std::vector<Vec3> points = dvl_endpoints(cfg, ds, split);

  fs::create_directories(out_dir);
  std::vector<SweepRow> rows;
  for (double cs : cell_sizes) {
    const GridSpec spec = cfg.grid_at_cell_size(cs);
    FeatureGrid grid(spec, cfg.n);
    for (size_t i = lo; i < hi; ++i)
      grid.integrate_frame(ds.load_frame(i), ds.frames[i].pose.compose(mount));
    TriangleMesh mesh =
        reconstruct_mesh(grid, cls.model, reg.model, cfg.threshold, cfg.tau);
    // Evaluate the persisted mesh so results match cmd_evaluate exactly
    // (PLY vertices are f32).
    char name[64];
    std::snprintf(name, sizeof(name), "sweep_mesh_%g.ply", cs);
    const std::string mesh_path = out_dir + "/" + name;
    export_ply(mesh, mesh_path);
    mesh = import_ply(mesh_path);
    SweepRow row;
    row.cell_size = cs;
    row.point_count = points.size();
    row.triangle_count = mesh.triangles.size();
    row.mse = mesh.triangles.empty()
                  ? std::numeric_limits<double>::infinity()
                  : evaluate(mesh, points, cs).mse;
    rows.push_back(row);
  }

  std::string csv = "cell_size,mse,triangle_count,point_count\n";
  for (const auto& r : rows)
    csv += fmt_double(r.cell_size) + "," + fmt_double(r.mse) + "," +
           std::to_string(r.triangle_count) + "," + std::to_string(r.point_count) + "\n";
  write_text(out_dir + "/sweep.csv", csv);
  return rows;
}

}  // namespace sapg::pipeline
