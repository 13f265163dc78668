#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "sapg/geometry.hpp"
#include "sapg/mesh.hpp"

namespace sapg {

// Closest point on triangle (a,b,c) to p (Ericson, Real-Time Collision
// Detection, 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  return (p - closest_point_on_triangle(p, a, b, c)).norm();
}

// Uniform-grid triangle index. Query walks outward shell by shell and stops
// once the nearest possible cell is farther than the best hit, so results
// match the brute-force scan exactly.
class MeshDistanceIndex {
 public:
  explicit MeshDistanceIndex(const TriangleMesh& mesh) : mesh_(&mesh) {
    if (mesh.triangles.empty())
      throw std::domain_error("MeshDistanceIndex: empty mesh");
    lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    double edge_sum = 0.0;
    for (const auto& t : mesh.triangles) {
      for (uint32_t vi : t) {
        lo_ = lo_.cwiseMin(mesh.vertices[vi]);
        hi_ = hi_.cwiseMax(mesh.vertices[vi]);
      }
      edge_sum += (mesh.vertices[t[1]] - mesh.vertices[t[0]]).norm();
    }
    cell_ = std::max(1e-6, 2.0 * edge_sum / mesh.triangles.size());
    for (int i = 0; i < 3; ++i) {
      dims_[i] = std::max<int64_t>(
          1, static_cast<int64_t>(std::ceil((hi_[i] - lo_[i]) / cell_)));
      dims_[i] = std::min<int64_t>(dims_[i], 256);
    }
    cell_ = 0.0;
    for (int i = 0; i < 3; ++i)
      cell_ = std::max(cell_, (hi_[i] - lo_[i]) / static_cast<double>(dims_[i]));
    cell_ = std::max(cell_, 1e-6);
    bins_.resize(static_cast<size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (uint32_t ti = 0; ti < mesh.triangles.size(); ++ti) {
      Vec3 tlo = Vec3::Constant(std::numeric_limits<double>::infinity());
      Vec3 thi = -tlo;
      for (uint32_t vi : mesh.triangles[ti]) {
        tlo = tlo.cwiseMin(mesh.vertices[vi]);
        thi = thi.cwiseMax(mesh.vertices[vi]);
      }
      int64_t c0[3], c1[3];
      for (int i = 0; i < 3; ++i) {
        c0[i] = clamp_coord(static_cast<int64_t>((tlo[i] - lo_[i]) / cell_), i);
        c1[i] = clamp_coord(static_cast<int64_t>((thi[i] - lo_[i]) / cell_), i);
      }
      for (int64_t z = c0[2]; z <= c1[2]; ++z)
        for (int64_t y = c0[1]; y <= c1[1]; ++y)
          for (int64_t x = c0[0]; x <= c1[0]; ++x)
            bins_[bin_index(x, y, z)].push_back(ti);
    }
  }

  double distance(const Vec3& p) const {
    int64_t px = clamp_coord(static_cast<int64_t>((p.x() - lo_.x()) / cell_), 0);
    int64_t py = clamp_coord(static_cast<int64_t>((p.y() - lo_.y()) / cell_), 1);
    int64_t pz = clamp_coord(static_cast<int64_t>((p.z() - lo_.z()) / cell_), 2);
    double best = std::numeric_limits<double>::infinity();
    const int64_t max_ring =
        std::max({dims_[0], dims_[1], dims_[2]});
    for (int64_t ring = 0; ring < max_ring; ++ring) {
      // Any cell in this shell is at least (ring-1)*cell away from p.
      if (ring > 1 && best <= (ring - 1) * cell_) break;
      bool any = false;
      for (int64_t z = pz - ring; z <= pz + ring; ++z) {
        if (z < 0 || z >= dims_[2]) continue;
        for (int64_t y = py - ring; y <= py + ring; ++y) {
          if (y < 0 || y >= dims_[1]) continue;
          for (int64_t x = px - ring; x <= px + ring; ++x) {
            if (x < 0 || x >= dims_[0]) continue;
            const bool on_shell = std::max({std::llabs(x - px), std::llabs(y - py),
                                            std::llabs(z - pz)}) == ring;
            if (!on_shell) continue;
            any = true;
            for (uint32_t ti : bins_[bin_index(x, y, z)]) {
              const auto& t = (*mesh_).triangles[ti];
              const double d = point_triangle_distance(
                  p, mesh_->vertices[t[0]], mesh_->vertices[t[1]], mesh_->vertices[t[2]]);
              best = std::min(best, d);
            }
          }
        }
      }
      if (!any && std::isfinite(best)) break;
    }
    if (!std::isfinite(best)) {
      // Point far outside the indexed box: fall back to the full scan.
      for (const auto& t : mesh_->triangles)
        best = std::min(best, point_triangle_distance(p, mesh_->vertices[t[0]],
                                                      mesh_->vertices[t[1]],
                                                      mesh_->vertices[t[2]]));
    }
    return best;
  }

 private:
  int64_t clamp_coord(int64_t v, int axis) const {
    return std::clamp<int64_t>(v, 0, dims_[axis] - 1);
  }
  size_t bin_index(int64_t x, int64_t y, int64_t z) const {
    return static_cast<size_t>((z * dims_[1] + y) * dims_[0] + x);
  }

  const TriangleMesh* mesh_;
  Vec3 lo_, hi_;
  double cell_ = 1.0;
  int64_t dims_[3] = {1, 1, 1};
  std::vector<std::vector<uint32_t>> bins_;
};

inline double point_to_mesh_distance(const Vec3& p, const TriangleMesh& mesh) {
  MeshDistanceIndex index(mesh);
  return index.distance(p);
}

struct EvalReport {
  std::vector<double> distances;  // per ground-truth point, meters
  double mse = 0.0;               // mean squared distance, m^2
  size_t point_count = 0;
  size_t triangle_count = 0;
  double cell_size = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["mse"] = mse;
    j["point_count"] = point_count;
    j["triangle_count"] = triangle_count;
    j["cell_size"] = cell_size;
    j["distances"] = distances;
    return j;
  }
};

inline EvalReport evaluate(const TriangleMesh& mesh, const std::vector<Vec3>& points,
                           double cell_size = 0.0) {
  if (mesh.triangles.empty()) throw std::domain_error("evaluate: empty mesh");
  if (points.empty()) throw std::domain_error("evaluate: no ground-truth points");
  MeshDistanceIndex index(mesh);
  EvalReport report;
  report.distances.resize(points.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(points.size()); ++i)
    report.distances[i] = index.distance(points[i]);
  double acc = 0.0;
  for (double d : report.distances) acc += d * d;
  report.mse = acc / static_cast<double>(points.size());
  report.point_count = points.size();
  report.triangle_count = mesh.triangles.size();
  report.cell_size = cell_size;
  return report;
}

}  // namespace sapg
