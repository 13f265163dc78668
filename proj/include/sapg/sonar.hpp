#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sapg/geometry.hpp"
#include "sapg/rng.hpp"
#include "sapg/scene.hpp"

namespace sapg {

struct SonarConfig {
  double r_min = 0.5;
  double r_max = 20.0;
  int n_range_bins = 128;
  double azimuth_fov = 2.0;    // radians, centered on x
  int n_beams = 96;
  double elevation_fov = 0.5;  // radians, centered on the xy-plane
  int n_elevation_samples = 32;
  double noise_sigma = 0.02;   // additive Gaussian, fraction of full scale
  double march_step = 0.05;    // ray-march step, meters

  void validate() const {
    if (!(r_min < r_max) || r_min < 0.0)
      throw std::invalid_argument("SonarConfig: need 0 <= r_min < r_max");
    if (n_range_bins < 1 || n_beams < 1 || n_elevation_samples < 1)
      throw std::invalid_argument("SonarConfig: counts must be >= 1");
    if (!(azimuth_fov > 0.0 && azimuth_fov < M_PI) ||
        !(elevation_fov > 0.0 && elevation_fov < M_PI))
      throw std::invalid_argument("SonarConfig: FOVs must be in (0, pi)");
    if (!(march_step > 0.0))
      throw std::invalid_argument("SonarConfig: march_step must be > 0");
  }

  double range_bin_width() const { return (r_max - r_min) / n_range_bins; }

  // Nearest-bin lookups. Values on the outer boundary clamp to the last bin.
  int range_bin(double r) const {
    const int b = static_cast<int>((r - r_min) / (r_max - r_min) * n_range_bins);
    return std::clamp(b, 0, n_range_bins - 1);
  }
  int beam_bin(double azimuth) const {
    const int b = static_cast<int>((azimuth + 0.5 * azimuth_fov) / azimuth_fov * n_beams);
    return std::clamp(b, 0, n_beams - 1);
  }
  double beam_azimuth(int j) const {
    return -0.5 * azimuth_fov + (j + 0.5) * azimuth_fov / n_beams;
  }
  double elevation_sample(int k) const {
    return -0.5 * elevation_fov + (k + 0.5) * elevation_fov / n_elevation_samples;
  }

  bool operator==(const SonarConfig&) const = default;
};

// Polar intensity raster I(range_bin, beam). Intensities are quantized to
// 16-bit levels (like an ADC would); this also keeps downstream double
// accumulation of per-cell sums exact regardless of integration order.
struct SonarImage {
  SonarConfig config;
  double timestamp = 0.0;
  std::vector<float> intensities;  // n_range_bins * n_beams, row = range bin

  float at(int range_bin, int beam) const {
    return intensities[static_cast<size_t>(range_bin) * config.n_beams + beam];
  }
  float& at(int range_bin, int beam) {
    return intensities[static_cast<size_t>(range_bin) * config.n_beams + beam];
  }

  static float quantize(double v) {
    return static_cast<float>(std::round(v * 65536.0) / 65536.0);
  }
};

struct DvlConfig {
  std::array<Vec3, 4> beam_directions;  // unit, body frame
  double opening_angle = 0.05;          // radians, full cone angle per beam
  double max_range = 50.0;
  double march_step = 0.05;

  // Janus arrangement: four beams tilted from straight down, at azimuths
  // 45/135/225/315 degrees in the body frame.
  static DvlConfig janus(double tilt, double opening_angle, double max_range,
                         double march_step) {
    DvlConfig c;
    for (int i = 0; i < 4; ++i) {
      const double az = M_PI_4 + i * M_PI_2;
      c.beam_directions[i] = Vec3(std::sin(tilt) * std::cos(az),
                                  std::sin(tilt) * std::sin(az), -std::cos(tilt));
    }
    c.opening_angle = opening_angle;
    c.max_range = max_range;
    c.march_step = march_step;
    return c;
  }

  void validate() const {
    for (const auto& d : beam_directions)
      if (std::abs(d.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("DvlConfig: beam directions must be unit");
  }
};

namespace detail {

// First zero crossing of the scene SDF along a ray, refined by bisection.
// Returns the hit distance, or nothing if the segment [t0, t1] stays in
// free water.
inline std::optional<double> raycast(const Scene& scene, const Vec3& origin,
                                     const Vec3& dir, double t0, double t1,
                                     double step) {
  double t_prev = t0;
  double d_prev = scene.signed_distance(origin + t0 * dir);
  if (d_prev <= 0.0) return t0;
  for (double t = t0 + step; t <= t1 + 0.5 * step; t += step) {
    const double tc = std::min(t, t1);
    const double d = scene.signed_distance(origin + tc * dir);
    if (d <= 0.0) {
      double lo = t_prev, hi = tc;
      for (int i = 0; i < 20; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (scene.signed_distance(origin + mid * dir) <= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      return 0.5 * (lo + hi);
    }
    t_prev = tc;
    d_prev = d;
    if (tc >= t1) break;
  }
  return std::nullopt;
}

}  // namespace detail

// Simulates one multi-beam frame. Every (beam, elevation sample) ray is
// marched to its first surface hit; the hit adds a Lambertian term
// max(0, cos(incidence)) into its (range, beam) bin, so echoes from the whole
// elevation arc accumulate in the same 2D image (the elevation ambiguity).
// The 1/r^2 spreading loss is folded into the normalization, mimicking the
// time-varying gain of a real sonar. Deterministic for a fixed seed.
inline SonarImage simulate_sonar(const Scene& scene, const Pose& pose,
                                 const SonarConfig& cfg, uint64_t rng_seed,
                                 double timestamp = 0.0) {
  cfg.validate();
  SonarImage img;
  img.config = cfg;
  img.timestamp = timestamp;
  const size_t n = static_cast<size_t>(cfg.n_range_bins) * cfg.n_beams;
  std::vector<double> acc(n, 0.0);

  for (int j = 0; j < cfg.n_beams; ++j) {
    const double az = cfg.beam_azimuth(j);
    for (int k = 0; k < cfg.n_elevation_samples; ++k) {
      const double el = cfg.elevation_sample(k);
      const Vec3 dir_sonar(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                           std::sin(el));
      const Vec3 dir = pose.rotation * dir_sonar;
      const auto hit = detail::raycast(scene, pose.translation, dir,
                                       std::max(cfg.r_min, cfg.march_step), cfg.r_max,
                                       cfg.march_step);
      if (!hit) continue;
      const Vec3 p = pose.translation + *hit * dir;
      const Vec3 g = scene.sdf_gradient(p, 0.5 * cfg.march_step);
      const double gn = g.norm();
      if (gn < 1e-12) continue;
      const double cos_inc = std::max(0.0, -dir.dot(g) / gn);
      acc[static_cast<size_t>(cfg.range_bin(*hit)) * cfg.n_beams + j] += cos_inc;
    }
  }

  double maxv = 0.0;
  for (double v : acc) maxv = std::max(maxv, v);
  const double scale = maxv > 1.0 ? 1.0 / maxv : 1.0;

  Rng rng(rng_seed);
  img.intensities.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double v = acc[i] * scale;
    if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.normal();
    img.intensities[i] = SonarImage::quantize(std::clamp(v, 0.0, 1.0));
  }
  return img;
}

// Per-beam range along the central ray to the first SDF zero crossing.
inline std::array<std::optional<double>, 4> simulate_dvl(const Scene& scene,
                                                         const Pose& pose,
                                                         const DvlConfig& cfg) {
  cfg.validate();
  std::array<std::optional<double>, 4> out;
  for (int i = 0; i < 4; ++i) {
    const Vec3 dir = pose.rotation * cfg.beam_directions[i];
    out[i] = detail::raycast(scene, pose.translation, dir, cfg.march_step,
                             cfg.max_range, cfg.march_step);
  }
  return out;
}

}  // namespace sapg
