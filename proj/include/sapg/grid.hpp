#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "sapg/geometry.hpp"

namespace sapg {

struct CellIndex {
  int x = 0, y = 0, z = 0;
  bool operator==(const CellIndex&) const = default;
};

// Axis-aligned voxel grid layout shared by the feature grid and the TSDFs.
// Linear cell order is x-fastest: idx = x + dims.x * (y + dims.y * z).
struct GridSpec {
  Vec3 origin = Vec3::Zero();  // world position of the min corner
  double cell_size = 0.1;
  std::array<int, 3> dims = {1, 1, 1};

  void validate() const {
    if (!(cell_size > 0.0)) throw std::invalid_argument("GridSpec: cell_size must be > 0");
    for (int d : dims)
      if (d < 1) throw std::invalid_argument("GridSpec: dims must be >= 1");
  }

  size_t cell_count() const {
    return static_cast<size_t>(dims[0]) * dims[1] * dims[2];
  }

  bool contains(const CellIndex& c) const {
    return c.x >= 0 && c.x < dims[0] && c.y >= 0 && c.y < dims[1] && c.z >= 0 &&
           c.z < dims[2];
  }

  size_t linear(const CellIndex& c) const {
    return static_cast<size_t>(c.x) +
           static_cast<size_t>(dims[0]) *
               (static_cast<size_t>(c.y) + static_cast<size_t>(dims[1]) * c.z);
  }

  CellIndex unlinear(size_t i) const {
    const int x = static_cast<int>(i % dims[0]);
    const int y = static_cast<int>((i / dims[0]) % dims[1]);
    const int z = static_cast<int>(i / (static_cast<size_t>(dims[0]) * dims[1]));
    return CellIndex{x, y, z};
  }

  Vec3 cell_center(const CellIndex& c) const {
    return origin + cell_size * Vec3(c.x + 0.5, c.y + 0.5, c.z + 0.5);
  }

  // Cell containing a world point (may be out of bounds; check contains()).
  CellIndex cell_at(const Vec3& p) const {
    const Vec3 q = (p - origin) / cell_size;
    return CellIndex{static_cast<int>(std::floor(q.x())),
                     static_cast<int>(std::floor(q.y())),
                     static_cast<int>(std::floor(q.z()))};
  }

  Vec3 max_corner() const {
    return origin + cell_size * Vec3(dims[0], dims[1], dims[2]);
  }

  bool operator==(const GridSpec& o) const {
    return origin == o.origin && cell_size == o.cell_size && dims == o.dims;
  }
};

}  // namespace sapg
