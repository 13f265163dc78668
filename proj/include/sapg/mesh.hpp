#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sapg/binary_io.hpp"
#include "sapg/geometry.hpp"

namespace sapg {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }

  Vec3 triangle_normal(size_t t) const {
    const auto& tri = triangles[t];
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    return e1.cross(e2);
  }
};

// Binary little-endian PLY with float vertices and uchar-counted int faces.
inline void export_ply(const TriangleMesh& mesh, const std::string& path) {
  auto os = io::open_out(path);
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << mesh.vertices.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "element face " << mesh.triangles.size() << "\n"
         << "property list uchar int vertex_indices\nend_header\n";
  const std::string h = header.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& v : mesh.vertices)
    for (int i = 0; i < 3; ++i) io::write_le<float>(os, static_cast<float>(v[i]));
  for (const auto& t : mesh.triangles) {
    io::write_le<uint8_t>(os, 3);
    for (uint32_t idx : t) io::write_le<int32_t>(os, static_cast<int32_t>(idx));
  }
  if (!os) throw std::runtime_error("failed writing PLY: " + path);
}

inline TriangleMesh import_ply(const std::string& path) {
  auto is = io::open_in(path);
  std::string line;
  size_t n_vertices = 0, n_faces = 0;
  bool binary_le = false;
  if (!std::getline(is, line) || line != "ply")
    throw std::runtime_error("not a PLY file: " + path);
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (tok == "element") {
      std::string what;
      size_t count;
      ss >> what >> count;
      if (what == "vertex") n_vertices = count;
      if (what == "face") n_faces = count;
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!binary_le)
    throw std::runtime_error("unsupported PLY format (need binary LE): " + path);
  TriangleMesh mesh;
  mesh.vertices.resize(n_vertices);
  for (auto& v : mesh.vertices)
    for (int i = 0; i < 3; ++i) v[i] = io::read_le<float>(is);
  mesh.triangles.resize(n_faces);
  for (auto& t : mesh.triangles) {
    const uint8_t count = io::read_le<uint8_t>(is);
    if (count != 3) throw std::runtime_error("PLY: non-triangle face in " + path);
    for (int i = 0; i < 3; ++i) {
      const int32_t idx = io::read_le<int32_t>(is);
      if (idx < 0 || static_cast<size_t>(idx) >= n_vertices)
        throw std::runtime_error("PLY: vertex index out of range in " + path);
      t[i] = static_cast<uint32_t>(idx);
    }
  }
  return mesh;
}

}  // namespace sapg
