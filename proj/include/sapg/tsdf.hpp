#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sapg/feature_grid.hpp"
#include "sapg/geometry.hpp"
#include "sapg/grid.hpp"

namespace sapg {

// Truncated signed distance grid. Distances are positive in free water and
// clamped to [-tau, tau]. Two accumulators per cell:
//   - band: weighted running average of signed distances fused inside the
//     truncation band of a measurement (sum / weight);
//   - carve: free-space marks from rays passing well in front of their
//     surface hit. Carve marks never bias the band average; a cell with only
//     carve evidence reads as +tau (known out-of-band).
class TsdfGrid {
 public:
  TsdfGrid() = default;
  TsdfGrid(const GridSpec& spec, double tau) : spec_(spec), tau_(tau) {
    spec_.validate();
    if (!(tau > 0.0)) throw std::invalid_argument("TsdfGrid: tau must be > 0");
    const size_t n = spec_.cell_count();
    band_sum_.assign(n, 0.0);
    band_weight_.assign(n, 0.0f);
    carve_weight_.assign(n, 0.0f);
    gradient_.assign(n, {0.0, 0.0, 0.0});
  }

  const GridSpec& spec() const { return spec_; }
  double tau() const { return tau_; }

  double weight(size_t cell) const {
    return static_cast<double>(band_weight_[cell]) + carve_weight_[cell];
  }
  double band_weight(size_t cell) const { return band_weight_[cell]; }
  double carve_weight(size_t cell) const { return carve_weight_[cell]; }

  // Fused truncated signed distance; only meaningful where weight() > 0.
  double distance(size_t cell) const {
    if (band_weight_[cell] > 0.0f) return band_sum_[cell] / band_weight_[cell];
    return tau_;
  }

  bool has_gradient(size_t cell) const {
    const auto& g = gradient_[cell];
    return g[0] != 0.0 || g[1] != 0.0 || g[2] != 0.0;
  }
  Vec3 gradient(size_t cell) const {
    const auto& g = gradient_[cell];
    return Vec3(g[0], g[1], g[2]);
  }

  void fuse_band(size_t cell, double signed_distance) {
    band_sum_[cell] += std::clamp(signed_distance, -tau_, tau_);
    band_weight_[cell] += 1.0f;
  }
  void mark_free(size_t cell) { carve_weight_[cell] += 1.0f; }

  void set_cell(size_t cell, double distance, float band_w, float carve_w,
                const Vec3& grad) {
    band_sum_[cell] = distance * band_w;
    band_weight_[cell] = band_w;
    carve_weight_[cell] = carve_w;
    gradient_[cell] = {grad.x(), grad.y(), grad.z()};
  }
  void set_gradient(size_t cell, const Vec3& g) {
    gradient_[cell] = {g.x(), g.y(), g.z()};
  }

 private:
  GridSpec spec_;
  double tau_ = 1.0;
  std::vector<double> band_sum_;
  std::vector<float> band_weight_;
  std::vector<float> carve_weight_;
  std::vector<std::array<double, 3>> gradient_;
};

// Projects one range measurement into the TSDF. Nine rays approximate the
// beam cone: the central axis plus eight placed on the outside cone at
// azimuths 2*pi*k/8 around it, all carrying the same range. Each ray fuses
// d = range - s for samples s in [range - tau, range + tau] (step
// cell_size / 2). The central ray additionally marks the free-space cells it
// crosses between the origin and the start of the band.
inline void integrate_range_beam(TsdfGrid& tsdf, const Vec3& origin,
                                 const Vec3& direction, double range,
                                 double opening_angle) {
  if (std::abs(direction.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("integrate_range_beam: direction must be unit");
  if (!(range > 0.0))
    throw std::invalid_argument("integrate_range_beam: range must be > 0");

  const double tau = tsdf.tau();
  const GridSpec& spec = tsdf.spec();
  const double step = 0.5 * spec.cell_size;

  std::array<Vec3, 9> rays;
  rays[0] = direction;
  const Vec3 anchor = std::abs(direction.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = anchor.cross(direction).normalized();
  const Vec3 v = direction.cross(u);
  const double half = 0.5 * opening_angle;
  for (int k = 0; k < 8; ++k) {
    const double psi = 2.0 * M_PI * k / 8.0;
    rays[k + 1] =
        std::cos(half) * direction + std::sin(half) * (std::cos(psi) * u + std::sin(psi) * v);
  }

  for (const Vec3& d : rays) {
    const double s0 = std::max(0.0, range - tau);
    for (double s = s0; s <= range + tau + 1e-9; s += step) {
      const CellIndex ci = spec.cell_at(origin + s * d);
      if (spec.contains(ci)) tsdf.fuse_band(spec.linear(ci), range - s);
    }
  }
  // Free-space carving, central ray only.
  for (double s = step; s < range - tau - 0.5 * step; s += step) {
    const CellIndex ci = spec.cell_at(origin + s * direction);
    if (spec.contains(ci)) tsdf.mark_free(spec.linear(ci));
  }
}

namespace detail {
// Separable 3D Sobel: smooth [1,2,1] on the two transverse axes, central
// difference [-1,0,1] along the derivative axis.
inline double sobel_weight(int d, int s1, int s2) {
  static constexpr int smooth[3] = {1, 2, 1};
  static constexpr int deriv[3] = {-1, 0, 1};
  return deriv[d + 1] * smooth[s1 + 1] * smooth[s2 + 1];
}
}  // namespace detail

// Normalized 3x3x3 Sobel gradient of the fused distance field. Cells whose
// full 27-neighborhood is unobserved keep no gradient, as do cells where the
// response is numerically zero.
inline void sobel_gradients(TsdfGrid& tsdf) {
  const GridSpec& spec = tsdf.spec();
  const auto& dims = spec.dims;
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        const size_t cell = spec.linear({x, y, z});
        tsdf.set_gradient(cell, Vec3::Zero());
        if (x < 1 || y < 1 || z < 1 || x > dims[0] - 2 || y > dims[1] - 2 ||
            z > dims[2] - 2)
          continue;
        bool complete = true;
        Vec3 g = Vec3::Zero();
        for (int dz = -1; dz <= 1 && complete; ++dz)
          for (int dy = -1; dy <= 1 && complete; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const size_t nb = spec.linear({x + dx, y + dy, z + dz});
              if (!(tsdf.weight(nb) > 0.0)) {
                complete = false;
                break;
              }
              const double d = tsdf.distance(nb);
              g.x() += detail::sobel_weight(dx, dy, dz) * d;
              g.y() += detail::sobel_weight(dy, dx, dz) * d;
              g.z() += detail::sobel_weight(dz, dx, dy) * d;
            }
        if (!complete) continue;
        const double n = g.norm();
        if (n < 1e-9) continue;
        tsdf.set_gradient(cell, g / n);
      }
}

// Flat training set: one row per cell with both feature observations and
// TSDF evidence. Regression targets exist only for in-band cells that also
// carry a Sobel gradient.
struct SampleSet {
  int n = 0;  // feature resolution; input width is 3n
  size_t count = 0;
  std::vector<float> features;    // count * 3n
  std::vector<uint8_t> label;     // 1 = inside truncation band
  std::vector<uint8_t> has_reg;   // regression target present
  std::vector<double> reg;        // count * 3: d_c, delta_u, delta_v
  std::vector<uint32_t> cell;     // source cell (diagnostics)

  size_t positives() const {
    size_t p = 0;
    for (uint8_t l : label) p += l;
    return p;
  }
};

inline SampleSet make_samples(const TsdfGrid& tsdf, const FeatureGrid& grid) {
  if (!(tsdf.spec() == grid.spec()))
    throw std::invalid_argument("make_samples: TSDF and feature grid specs differ");
  const double tau = tsdf.tau();
  SampleSet set;
  set.n = grid.n();
  const size_t width = static_cast<size_t>(3) * grid.n();
  const size_t total = grid.spec().cell_count();
  for (size_t c = 0; c < total; ++c) {
    if (!grid.observed(c) || !(tsdf.weight(c) > 0.0)) continue;
    const double d = tsdf.distance(c);
    const bool inside = std::abs(d) < tau;
    set.features.resize(set.features.size() + width);
    grid.fill_input(c, &set.features[set.count * width]);
    set.label.push_back(inside ? 1 : 0);
    bool has_reg = false;
    double du = 0.0, dv = 0.0;
    if (inside && tsdf.has_gradient(c)) {
      const Vec3 g = tsdf.gradient(c).normalized();
      if (g.z() > -1.0 + 1e-9) {  // log map is singular at -e_z
        const TangentDelta delta = log_map(g);
        du = delta.u;
        dv = delta.v;
        has_reg = true;
      }
    }
    set.has_reg.push_back(has_reg ? 1 : 0);
    set.reg.push_back(d);
    set.reg.push_back(du);
    set.reg.push_back(dv);
    set.cell.push_back(static_cast<uint32_t>(c));
    ++set.count;
  }
  return set;
}

}  // namespace sapg
