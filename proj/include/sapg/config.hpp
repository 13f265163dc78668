#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sapg/binary_io.hpp"
#include "sapg/grid.hpp"
#include "sapg/nn_train.hpp"
#include "sapg/scene.hpp"
#include "sapg/sonar.hpp"
#include "sapg/trajectory.hpp"

namespace sapg {

// Whole-pipeline configuration, one JSON document. Angles are degrees in the
// file and radians in memory.
struct PipelineConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";

  nlohmann::json scene_json;  // kept verbatim for hashing / round-trip
  TrajectoryConfig trajectory;
  SonarConfig sonar;
  double dvl_tilt = 30.0 * M_PI / 180.0;
  double dvl_opening = 3.0 * M_PI / 180.0;
  double dvl_max_range = 50.0;

  // Explicit grid, or cell size + auto bounds from the trajectory.
  std::optional<GridSpec> grid;
  double cell_size = 0.2;

  int n = 100;       // feature vector resolution per axis
  double tau = 1.0;  // truncation threshold, meters
  nn::TrainConfig train;
  double threshold = 0.5;  // classifier decision threshold

  Scene scene() const { return Scene::from_json(scene_json); }

  DvlConfig dvl() const {
    return DvlConfig::janus(dvl_tilt, dvl_opening, dvl_max_range, cell_size / 4.0);
  }

  SonarConfig sonar_with_step() const {
    SonarConfig c = sonar;
    if (!(c.march_step > 0.0)) c.march_step = cell_size / 4.0;
    return c;
  }

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
    if (n < 8) throw std::invalid_argument("config: n must be >= 8");
    if (!(cell_size > 0.0)) throw std::invalid_argument("config: cell_size must be > 0");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw std::invalid_argument("config: threshold must be in (0,1)");
    sonar_with_step().validate();
    trajectory.validate();
    train.validate();
    if (grid) grid->validate();
  }

  // Grid bounds: explicit if given, otherwise derived from the trajectory
  // bounding box expanded horizontally by r_max and vertically by the
  // sonar's angular reach (elevation half-FOV plus mounting pitch) plus tau.
  GridSpec resolved_grid() const {
    if (grid) return *grid;
    const auto poses = generate_trajectory(trajectory);
    Vec3 lo = poses.front().pose.translation;
    Vec3 hi = lo;
    for (const auto& tp : poses) {
      lo = lo.cwiseMin(tp.pose.translation);
      hi = hi.cwiseMax(tp.pose.translation);
    }
    const double half_el = 0.5 * sonar.elevation_fov;
    const double pitch = std::abs(trajectory.mount_pitch);
    const double down = sonar.r_max * std::sin(std::min(M_PI_2, pitch + half_el)) + tau;
    const double up = sonar.r_max * std::sin(std::max(0.0, half_el - pitch)) + tau;
    lo -= Vec3(sonar.r_max, sonar.r_max, down);
    hi += Vec3(sonar.r_max, sonar.r_max, up);
    GridSpec spec;
    spec.origin = lo;
    spec.cell_size = cell_size;
    for (int i = 0; i < 3; ++i)
      spec.dims[i] = std::max(1, static_cast<int>(std::ceil((hi[i] - lo[i]) / cell_size)));
    return spec;
  }

  // Same bounds at a different resolution (the sweep command).
  GridSpec grid_at_cell_size(double cs) const {
    GridSpec base = resolved_grid();
    GridSpec spec;
    spec.origin = base.origin;
    spec.cell_size = cs;
    const Vec3 extent = base.max_corner() - base.origin;
    for (int i = 0; i < 3; ++i)
      spec.dims[i] = std::max(1, static_cast<int>(std::ceil(extent[i] / cs)));
    return spec;
  }

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  static PipelineConfig load(const std::string& path);
  // FNV-1a over the canonical serialization; changes iff any field changes.
  std::string hash() const;
};

namespace detail {
inline double deg(double radians) { return radians * 180.0 / M_PI; }
inline double rad(double degrees) { return degrees * M_PI / 180.0; }
}  // namespace detail

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.seed = j.value("seed", uint64_t{1});
  c.out_dir = j.value("out_dir", std::string("out"));
  c.scene_json = j.value("scene", nlohmann::json::object());

  if (j.contains("trajectory")) {
    const auto& t = j.at("trajectory");
    const std::string kind = t.value("kind", std::string("square"));
    if (kind == "square")
      c.trajectory.kind = TrajectoryKind::Square;
    else if (kind == "line")
      c.trajectory.kind = TrajectoryKind::Line;
    else
      throw std::invalid_argument("config: unknown trajectory kind " + kind);
    c.trajectory.length = t.value("length", 50.0);
    c.trajectory.altitude = t.value("altitude", 5.0);
    c.trajectory.speed = t.value("speed", 1.0);
    c.trajectory.sample_rate = t.value("sample_rate", 2.0);
    c.trajectory.laps = t.value("laps", 1);
    c.trajectory.lap_displacement = t.value("lap_displacement", 0.0);
    c.trajectory.mount_pitch = detail::rad(t.value("mount_pitch_deg", 0.0));
  }
  if (j.contains("sonar")) {
    const auto& s = j.at("sonar");
    c.sonar.r_min = s.value("r_min", 0.5);
    c.sonar.r_max = s.value("r_max", 20.0);
    c.sonar.n_range_bins = s.value("range_bins", 128);
    c.sonar.azimuth_fov = detail::rad(s.value("azimuth_fov_deg", 120.0));
    c.sonar.n_beams = s.value("beams", 96);
    c.sonar.elevation_fov = detail::rad(s.value("elevation_fov_deg", 20.0));
    c.sonar.n_elevation_samples = s.value("elevation_samples", 32);
    c.sonar.noise_sigma = s.value("noise_sigma", 0.02);
    c.sonar.march_step = s.value("march_step", 0.0);  // 0 = cell_size / 4
  }
  if (j.contains("dvl")) {
    const auto& d = j.at("dvl");
    c.dvl_tilt = detail::rad(d.value("tilt_deg", 30.0));
    c.dvl_opening = detail::rad(d.value("opening_deg", 3.0));
    c.dvl_max_range = d.value("max_range", 50.0);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.cell_size = g.value("cell_size", 0.2);
    if (g.contains("origin") && g.contains("dims")) {
      GridSpec spec;
      spec.origin = Vec3(g.at("origin")[0], g.at("origin")[1], g.at("origin")[2]);
      spec.cell_size = c.cell_size;
      for (int i = 0; i < 3; ++i) spec.dims[i] = g.at("dims")[i].get<int>();
      c.grid = spec;
    }
  }
  c.n = j.value("n", 100);
  c.tau = j.value("tau", 1.0);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.learning_rate = t.value("learning_rate", 1e-4);
    c.train.validation_split = t.value("validation_split", 0.2);
    c.train.batch_size = t.value("batch_size", 64);
    c.train.max_epochs = t.value("max_epochs", 200);
    c.train.patience = t.value("patience", 10);
    c.train.max_epoch_samples = t.value("max_epoch_samples", 0);
    c.train.max_val_samples = t.value("max_val_samples", 0);
    c.train.negative_ratio = t.value("negative_ratio", 3.0);
  }
  c.threshold = j.value("threshold", 0.5);
  c.validate();
  return c;
}

inline nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["scene"] = scene_json;
  nlohmann::json t;
  t["kind"] = trajectory.kind == TrajectoryKind::Square ? "square" : "line";
  t["length"] = trajectory.length;
  t["altitude"] = trajectory.altitude;
  t["speed"] = trajectory.speed;
  t["sample_rate"] = trajectory.sample_rate;
  t["laps"] = trajectory.laps;
  t["lap_displacement"] = trajectory.lap_displacement;
  t["mount_pitch_deg"] = detail::deg(trajectory.mount_pitch);
  j["trajectory"] = t;
  nlohmann::json s;
  s["r_min"] = sonar.r_min;
  s["r_max"] = sonar.r_max;
  s["range_bins"] = sonar.n_range_bins;
  s["azimuth_fov_deg"] = detail::deg(sonar.azimuth_fov);
  s["beams"] = sonar.n_beams;
  s["elevation_fov_deg"] = detail::deg(sonar.elevation_fov);
  s["elevation_samples"] = sonar.n_elevation_samples;
  s["noise_sigma"] = sonar.noise_sigma;
  s["march_step"] = sonar.march_step;
  j["sonar"] = s;
  nlohmann::json d;
  d["tilt_deg"] = detail::deg(dvl_tilt);
  d["opening_deg"] = detail::deg(dvl_opening);
  d["max_range"] = dvl_max_range;
  j["dvl"] = d;
  nlohmann::json g;
  g["cell_size"] = cell_size;
  if (grid) {
    g["origin"] = {grid->origin[0], grid->origin[1], grid->origin[2]};
    g["dims"] = {grid->dims[0], grid->dims[1], grid->dims[2]};
  }
  j["grid"] = g;
  j["n"] = n;
  j["tau"] = tau;
  nlohmann::json tr;
  tr["learning_rate"] = train.learning_rate;
  tr["validation_split"] = train.validation_split;
  tr["batch_size"] = train.batch_size;
  tr["max_epochs"] = train.max_epochs;
  tr["patience"] = train.patience;
  tr["max_epoch_samples"] = train.max_epoch_samples;
  tr["max_val_samples"] = train.max_val_samples;
  tr["negative_ratio"] = train.negative_ratio;
  j["train"] = tr;
  j["threshold"] = threshold;
  return j;
}

inline PipelineConfig PipelineConfig::load(const std::string& path) {
  auto is = io::open_in(path);
  nlohmann::json j;
  is >> j;
  return from_json(j);
}

inline std::string PipelineConfig::hash() const {
  // Provenance hash over the semantic fields; the output directory does not
  // affect artifact content.
  nlohmann::json j = to_json();
  j.erase("out_dir");
  const std::string s = j.dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : s) {
    h ^= static_cast<uint8_t>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace sapg
