#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sapg/feature_grid.hpp"
#include "sapg/geometry.hpp"
#include "sapg/mc_tables.hpp"
#include "sapg/mesh.hpp"
#include "sapg/nn.hpp"
#include "sapg/tsdf.hpp"

namespace sapg {

struct CellPrediction {
  uint32_t cell = 0;
  double inlier_prob = 0.0;
  bool inlier = false;
  double d = 0.0;        // predicted signed distance, valid iff inlier
  Vec3 n_hat = Vec3::UnitZ();  // predicted unit gradient, valid iff inlier
};

struct PredictStats {
  size_t evaluated = 0;
  size_t inliers = 0;
  size_t clamped_distance = 0;  // |d| fell outside the truncation band
  size_t clamped_delta = 0;     // |delta_n| exceeded the principal chart
};

// Runs the classifier over every observed cell and the regressor over cells
// at or above the decision threshold. Network outputs are lightly clamped
// back into their valid domains (the band for d, the principal chart for
// delta_n); the stats report how often that happened.
inline std::vector<CellPrediction> predict_cells(const FeatureGrid& grid,
                                                 const nn::Model& classifier,
                                                 const nn::Model& regressor,
                                                 double threshold, double tau,
                                                 PredictStats* stats = nullptr) {
  if (classifier.input_len() != 3 * grid.n() || regressor.input_len() != 3 * grid.n())
    throw std::invalid_argument("predict_cells: model input width != 3n");

  std::vector<uint32_t> observed;
  const size_t total = grid.spec().cell_count();
  for (size_t c = 0; c < total; ++c)
    if (grid.observed(c)) observed.push_back(static_cast<uint32_t>(c));

  std::vector<CellPrediction> preds(observed.size());
  PredictStats st;
  st.evaluated = observed.size();
  const int width = 3 * grid.n();

  size_t clamped_d = 0, clamped_delta = 0, inliers = 0;
#pragma omp parallel reduction(+ : clamped_d, clamped_delta, inliers)
  {
    nn::Activations ws;
    std::vector<float> feat(width);
    std::vector<double> input(width);
#pragma omp for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(observed.size()); ++i) {
      const uint32_t cell = observed[i];
      grid.fill_input(cell, feat.data());
      for (int k = 0; k < width; ++k) input[k] = feat[k];
      nn::forward(classifier, input.data(), ws);
      CellPrediction p;
      p.cell = cell;
      p.inlier_prob = ws.output()[0];
      p.inlier = p.inlier_prob >= threshold;
      if (p.inlier) {
        ++inliers;
        nn::forward(regressor, input.data(), ws);
        double d = ws.output()[0];
        TangentDelta delta{ws.output()[1], ws.output()[2]};
        const double limit = tau * (1.0 - 1e-9);
        if (std::abs(d) >= tau) {
          d = std::clamp(d, -limit, limit);
          ++clamped_d;
        }
        const double dn = delta.norm();
        if (dn > M_PI) {
          delta.u *= (M_PI - 1e-9) / dn;
          delta.v *= (M_PI - 1e-9) / dn;
          ++clamped_delta;
        }
        p.d = d;
        p.n_hat = exp_map(delta);
      }
      preds[i] = p;
    }
  }
  st.inliers = inliers;
  st.clamped_distance = clamped_d;
  st.clamped_delta = clamped_delta;
  if (stats) *stats = st;
  return preds;
}

// Fuses one predicted signed distance into the TSDF by tracing the gradient
// line through the cell toward the surface (direction -n_hat, so the free
// side keeps positive distances). Sample s hits the surface at s = d; the
// fused value is d - s, clamped to the band.
inline void fuse_prediction(TsdfGrid& tsdf, const Vec3& cell_center, double d,
                            const Vec3& n_hat, double tau) {
  if (!(std::abs(d) < tau)) throw std::invalid_argument("fuse_prediction: |d| must be < tau");
  if (std::abs(n_hat.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("fuse_prediction: n_hat must be unit");
  const GridSpec& spec = tsdf.spec();
  const double step = 0.5 * spec.cell_size;
  const Vec3 trace_dir = -n_hat;
  for (double s = d - tau; s <= d + tau + 1e-9; s += step) {
    const CellIndex ci = spec.cell_at(cell_center + s * trace_dir);
    if (spec.contains(ci)) tsdf.fuse_band(spec.linear(ci), d - s);
  }
}

// Standard 256-case marching cubes over cells whose eight corners all carry
// TSDF evidence. Vertices are welded on shared lattice edges, so closed
// surfaces come out watertight. Triangles are wound so normals point toward
// positive (free-space) distance.
inline TriangleMesh marching_cubes(const TsdfGrid& tsdf, double iso = 0.0) {
  const GridSpec& spec = tsdf.spec();
  const auto& dims = spec.dims;
  TriangleMesh mesh;
  if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2) return mesh;

  // Lattice corner (x,y,z) of each cube corner 0..7, classic ordering.
  static constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                        {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  // Each cube edge 0..11 as (base corner, axis); the base is the lower
  // lattice point, making edge keys shared between neighboring cubes.
  static constexpr int kEdgeBase[12] = {0, 1, 3, 0, 4, 5, 7, 4, 0, 1, 2, 3};
  static constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};

  std::unordered_map<uint64_t, uint32_t> edge_vertex;
  const auto corner_cell = [&](int x, int y, int z) {
    return spec.linear({x, y, z});
  };
  const auto corner_value = [&](size_t cell) {
    double d = tsdf.distance(cell) - iso;
    if (d == 0.0) d = 1e-30;  // keep crossings off lattice corners
    return d;
  };

  double vals[8];
  size_t cells[8];
  for (int z = 0; z + 1 < dims[2]; ++z)
    for (int y = 0; y + 1 < dims[1]; ++y)
      for (int x = 0; x + 1 < dims[0]; ++x) {
        bool all_observed = true;
        for (int i = 0; i < 8; ++i) {
          cells[i] = corner_cell(x + kCorner[i][0], y + kCorner[i][1], z + kCorner[i][2]);
          if (!(tsdf.weight(cells[i]) > 0.0)) {
            all_observed = false;
            break;
          }
        }
        if (!all_observed) continue;
        int cube_index = 0;
        for (int i = 0; i < 8; ++i) {
          vals[i] = corner_value(cells[i]);
          if (vals[i] < 0.0) cube_index |= 1 << i;
        }
        const uint16_t edges = mc::kEdgeTable[cube_index];
        if (edges == 0) continue;

        uint32_t edge_v[12];
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const int base = kEdgeBase[e];
          const int axis = kEdgeAxis[e];
          const int bx = x + kCorner[base][0];
          const int by = y + kCorner[base][1];
          const int bz = z + kCorner[base][2];
          const uint64_t key =
              (static_cast<uint64_t>((static_cast<uint64_t>(bz) * dims[1] + by) *
                                     dims[0] + bx)) * 3 + axis;
          auto it = edge_vertex.find(key);
          if (it == edge_vertex.end()) {
            const size_t ca = corner_cell(bx, by, bz);
            int ex = bx, ey = by, ez = bz;
            (axis == 0 ? ex : axis == 1 ? ey : ez) += 1;
            const size_t cb = corner_cell(ex, ey, ez);
            const double da = corner_value(ca);
            const double db = corner_value(cb);
            const double t = da / (da - db);  // signs differ on a cut edge
            Vec3 pa = spec.cell_center({bx, by, bz});
            Vec3 pb = spec.cell_center({ex, ey, ez});
            const Vec3 p = pa + t * (pb - pa);
            it = edge_vertex.emplace(key, static_cast<uint32_t>(mesh.vertices.size()))
                     .first;
            mesh.vertices.push_back(p);
          }
          edge_v[e] = it->second;
        }

        const int8_t* tri = mc::kTriTable[cube_index];
        for (int i = 0; tri[i] != -1; i += 3) {
          // Flipped winding: the classic tables orient toward the negative
          // side; our free space is positive.
          const uint32_t a = edge_v[tri[i]];
          const uint32_t b = edge_v[tri[i + 2]];
          const uint32_t c = edge_v[tri[i + 1]];
          if (a == b || b == c || a == c) continue;
          mesh.triangles.push_back({a, b, c});
        }
      }
  return mesh;
}

}  // namespace sapg
