#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sapg/geometry.hpp"
#include "sapg/grid.hpp"
#include "sapg/sonar.hpp"

namespace sapg {

// Discretizes a viewing angle in [0, pi/2] into n bins.
inline int angle_bin(double gamma, int n) {
  if (!(gamma >= 0.0 && gamma <= M_PI_2 + 1e-12))
    throw std::domain_error("angle_bin: angle outside [0, pi/2]");
  const int b = static_cast<int>(gamma / M_PI_2 * n);
  return std::min(b, n - 1);
}

// Mean intensity vector of one cell: 3n values ordered [x_z | x_y | x_x]
// (the z-axis block first). Bins never observed are zero with mask false.
struct FeatureVector {
  std::vector<double> values;
  std::vector<bool> mask;
};

// Spatial acoustic feature grid: per cell, three n-bin running means of the
// sonar intensity looked up at the cell's image position, binned by the
// angle between the cell-to-sonar direction and each world axis.
//
// Cell payloads are pool-allocated on first observation; untouched cells
// cost one int32 slot. Sums are accumulated in double: intensities are
// 16-bit quantized, so sums stay exactly representable and integration is
// bitwise order-independent.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(const GridSpec& spec, int n) : spec_(spec), n_(n) {
    spec_.validate();
    if (n < 1) throw std::invalid_argument("FeatureGrid: n must be >= 1");
    slots_.assign(spec_.cell_count(), -1);
  }

  const GridSpec& spec() const { return spec_; }
  int n() const { return n_; }
  size_t observed_cells() const { return pool_size_; }

  bool observed(size_t cell) const { return slots_[cell] >= 0; }

  // Number of observations landing in the cell (all axes use the same
  // per-observation count; axis 0 is representative).
  uint32_t observation_count(size_t cell) const {
    const int32_t s = slots_[cell];
    if (s < 0) return 0;
    uint32_t total = 0;
    const uint32_t* c = &counts_[static_cast<size_t>(s) * 3 * n_];
    for (int k = 0; k < n_; ++k) total += c[k];
    return total;
  }

  // Projects one frame into the grid: every cell whose center falls inside
  // the image's range window and angular FOV receives the intensity at its
  // (range, azimuth) image bin, once per axis.
  void integrate_frame(const SonarImage& img, const Pose& sonar_in_world) {
    if (!sonar_in_world.valid(1e-6))
      throw std::invalid_argument("integrate_frame: invalid pose");
    const SonarConfig& cfg = img.config;
    const Vec3 p_s = sonar_in_world.translation;
    const Mat3 r_t = sonar_in_world.rotation.transpose();

    // Scan only cells inside the frame's reach.
    const Vec3 lo = p_s - Vec3::Constant(cfg.r_max);
    const Vec3 hi = p_s + Vec3::Constant(cfg.r_max);
    CellIndex c0 = spec_.cell_at(lo);
    CellIndex c1 = spec_.cell_at(hi);
    c0.x = std::max(c0.x, 0); c0.y = std::max(c0.y, 0); c0.z = std::max(c0.z, 0);
    c1.x = std::min(c1.x, spec_.dims[0] - 1);
    c1.y = std::min(c1.y, spec_.dims[1] - 1);
    c1.z = std::min(c1.z, spec_.dims[2] - 1);

    const double half_az = 0.5 * cfg.azimuth_fov;
    const double half_el = 0.5 * cfg.elevation_fov;

    for (int z = c0.z; z <= c1.z; ++z)
      for (int y = c0.y; y <= c1.y; ++y)
        for (int x = c0.x; x <= c1.x; ++x) {
          const CellIndex ci{x, y, z};
          const Vec3 center = spec_.cell_center(ci);
          const Vec3 p_l = r_t * (center - p_s);
          if (p_l.x() <= 0.0) continue;  // forward-looking FOV (< pi)
          const double range = p_l.norm();
          if (range < cfg.r_min || range > cfg.r_max) continue;
          if (std::abs(std::atan2(p_l.y(), p_l.x())) > half_az) continue;
          const double horiz = std::hypot(p_l.x(), p_l.y());
          if (std::abs(std::atan2(p_l.z(), horiz)) > half_el) continue;

          const double intensity =
              img.at(cfg.range_bin(range), cfg.beam_bin(std::atan2(p_l.y(), p_l.x())));
          const Vec3 r_hat = (p_s - center) / range;
          const Vec3 gammas = axis_angles(r_hat);

          double* sums;
          uint32_t* counts;
          cell_data(spec_.linear(ci), sums, counts);
          for (int axis = 0; axis < 3; ++axis) {
            const int bin = angle_bin(gammas[axis], n_);
            sums[axis * n_ + bin] += intensity;
            counts[axis * n_ + bin] += 1;
          }
        }
  }

  FeatureVector feature_vector(size_t cell) const {
    FeatureVector fv;
    fv.values.assign(static_cast<size_t>(3) * n_, 0.0);
    fv.mask.assign(static_cast<size_t>(3) * n_, false);
    const int32_t s = slots_[cell];
    if (s < 0) return fv;
    const double* sums = &sums_[static_cast<size_t>(s) * 3 * n_];
    const uint32_t* counts = &counts_[static_cast<size_t>(s) * 3 * n_];
    // Axis storage order is x,y,z; the network input order is [x_z|x_y|x_x].
    for (int axis = 0; axis < 3; ++axis) {
      const int block = 2 - axis;
      for (int k = 0; k < n_; ++k) {
        const uint32_t c = counts[axis * n_ + k];
        if (c > 0) {
          fv.values[static_cast<size_t>(block) * n_ + k] = sums[axis * n_ + k] / c;
          fv.mask[static_cast<size_t>(block) * n_ + k] = true;
        }
      }
    }
    return fv;
  }

  // Network input written as 3n floats, same layout as feature_vector().
  void fill_input(size_t cell, float* out) const {
    const FeatureVector fv = feature_vector(cell);
    for (size_t i = 0; i < fv.values.size(); ++i)
      out[i] = static_cast<float>(fv.values[i]);
  }

  // Raw accessors (persistence, tests).
  const double* raw_sums(size_t cell) const {
    const int32_t s = slots_[cell];
    return s < 0 ? nullptr : &sums_[static_cast<size_t>(s) * 3 * n_];
  }
  const uint32_t* raw_counts(size_t cell) const {
    const int32_t s = slots_[cell];
    return s < 0 ? nullptr : &counts_[static_cast<size_t>(s) * 3 * n_];
  }
  void set_raw(size_t cell, const double* sums, const uint32_t* counts) {
    double* s;
    uint32_t* c;
    cell_data(cell, s, c);
    for (size_t i = 0; i < static_cast<size_t>(3) * n_; ++i) {
      s[i] = sums[i];
      c[i] = counts[i];
    }
  }

 private:
  void cell_data(size_t cell, double*& sums, uint32_t*& counts) {
    int32_t s = slots_[cell];
    if (s < 0) {
      s = static_cast<int32_t>(pool_size_++);
      slots_[cell] = s;
      sums_.resize(pool_size_ * 3 * n_, 0.0);
      counts_.resize(pool_size_ * 3 * n_, 0);
    }
    sums = &sums_[static_cast<size_t>(s) * 3 * n_];
    counts = &counts_[static_cast<size_t>(s) * 3 * n_];
  }

  GridSpec spec_;
  int n_ = 0;
  std::vector<int32_t> slots_;
  std::vector<double> sums_;
  std::vector<uint32_t> counts_;
  size_t pool_size_ = 0;
};

}  // namespace sapg
