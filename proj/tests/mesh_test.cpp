#include "sapg/mesh.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "sapg/reconstruction.hpp"

using namespace sapg;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TsdfGrid sphere_tsdf(double radius, double cell) {
  const double half = radius + 3.0 * cell;
  GridSpec spec;
  spec.origin = Vec3(-half, -half, -half);
  spec.cell_size = cell;
  const int d = static_cast<int>(std::ceil(2.0 * half / cell));
  spec.dims = {d, d, d};
  TsdfGrid tsdf(spec, 1e9);
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    const Vec3 p = spec.cell_center(spec.unlinear(c));
    tsdf.set_cell(c, p.norm() - radius, 1.0f, 0.0f, Vec3::Zero());
  }
  return tsdf;
}

TsdfGrid plane_tsdf(double cell) {
  GridSpec spec;
  spec.origin = Vec3(-2, -2, -1.05);  // offset so the plane avoids lattice points
  spec.cell_size = cell;
  spec.dims = {static_cast<int>(4 / cell), static_cast<int>(4 / cell),
               static_cast<int>(2 / cell)};
  TsdfGrid tsdf(spec, 1e9);
  for (size_t c = 0; c < spec.cell_count(); ++c)
    tsdf.set_cell(c, spec.cell_center(spec.unlinear(c)).z(), 1.0f, 0.0f, Vec3::Zero());
  return tsdf;
}

// Each undirected edge of a closed surface must be shared by exactly two
// triangles.
bool watertight(const TriangleMesh& mesh) {
  std::map<std::pair<uint32_t, uint32_t>, int> edges;
  for (const auto& t : mesh.triangles)
    for (int i = 0; i < 3; ++i) {
      uint32_t a = t[i], b = t[(i + 1) % 3];
      if (a > b) std::swap(a, b);
      edges[{a, b}] += 1;
    }
  for (const auto& [e, count] : edges)
    if (count != 2) return false;
  return !edges.empty();
}

}  // namespace

TEST(MarchingCubes, EmptyTsdfGivesEmptyMesh) {
  GridSpec spec;
  spec.dims = {8, 8, 8};
  spec.cell_size = 0.5;
  const TsdfGrid tsdf(spec, 1.0);
  const TriangleMesh mesh = marching_cubes(tsdf);
  EXPECT_TRUE(mesh.empty());
  EXPECT_EQ(mesh.vertices.size(), 0u);
}

TEST(MarchingCubes, SphereOracle) {
  const double radius = 2.0, cell = 0.1;
  const TriangleMesh mesh = marching_cubes(sphere_tsdf(radius, cell));
  ASSERT_GT(mesh.triangles.size(), 1000u);

  double sq = 0.0;
  for (const auto& v : mesh.vertices) {
    const double r = v.norm();
    EXPECT_GE(r, radius - cell);
    EXPECT_LE(r, radius + cell);
    sq += (r - radius) * (r - radius);
  }
  EXPECT_LE(std::sqrt(sq / mesh.vertices.size()), 0.5 * cell);
  EXPECT_TRUE(watertight(mesh));

  // Normals point toward positive distance (outward).
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3 centroid =
        (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    EXPECT_GT(mesh.triangle_normal(t).dot(centroid), 0.0) << "triangle " << t;
  }
}

TEST(MarchingCubes, PlaneOracle) {
  const double cell = 0.1;
  const TriangleMesh mesh = marching_cubes(plane_tsdf(cell));
  ASSERT_FALSE(mesh.empty());
  for (const auto& v : mesh.vertices) EXPECT_LE(std::abs(v.z()), 0.5 * cell);
  for (size_t t = 0; t < mesh.triangles.size(); ++t)
    EXPECT_GT(mesh.triangle_normal(t).z(), 0.0);
}

TEST(MarchingCubes, SkipsCubesWithUnobservedCorners) {
  GridSpec spec;
  spec.origin = Vec3(-2, -2, -1.05);
  spec.cell_size = 0.25;
  spec.dims = {16, 16, 8};
  TsdfGrid tsdf(spec, 1e9);
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    const Vec3 p = spec.cell_center(spec.unlinear(c));
    const float w = p.x() < 0.0 ? 1.0f : 0.0f;  // only half the grid observed
    tsdf.set_cell(c, p.z(), w, 0.0f, Vec3::Zero());
  }
  const TriangleMesh mesh = marching_cubes(tsdf);
  ASSERT_FALSE(mesh.empty());
  for (const auto& v : mesh.vertices) EXPECT_LT(v.x(), 0.0 + 1e-9);
}

TEST(MarchingCubes, NoDegenerateTrianglesOrBadIndices) {
  const TriangleMesh mesh = marching_cubes(sphere_tsdf(1.0, 0.2));
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (uint32_t idx : mesh.triangles[t]) ASSERT_LT(idx, mesh.vertices.size());
    EXPECT_GT(mesh.triangle_normal(t).norm(), 1e-12);
  }
}

TEST(Ply, EmptyMeshRoundTrip) {
  const std::string path = tmp_path("sapg_empty.ply");
  export_ply(TriangleMesh{}, path);
  const TriangleMesh back = import_ply(path);
  EXPECT_TRUE(back.vertices.empty());
  EXPECT_TRUE(back.triangles.empty());
}

TEST(Ply, UnitTriangleHandChecked) {
  TriangleMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  mesh.triangles = {{0, 1, 2}};
  const std::string path = tmp_path("sapg_tri.ply");
  export_ply(mesh, path);

  std::ifstream is(path, std::ios::binary);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "ply");
  std::getline(is, line);
  EXPECT_EQ(line, "format binary_little_endian 1.0");
  std::getline(is, line);
  EXPECT_EQ(line, "element vertex 3");

  const TriangleMesh back = import_ply(path);
  ASSERT_EQ(back.vertices.size(), 3u);
  ASSERT_EQ(back.triangles.size(), 1u);
  EXPECT_EQ(back.vertices[1], Vec3(1, 0, 0));
  EXPECT_EQ(back.triangles[0], (std::array<uint32_t, 3>{0, 1, 2}));
}

TEST(Ply, BinaryRoundTripIsByteIdentical) {
  const TriangleMesh mesh = marching_cubes(sphere_tsdf(1.0, 0.15));
  const std::string p1 = tmp_path("sapg_sphere1.ply");
  const std::string p2 = tmp_path("sapg_sphere2.ply");
  export_ply(mesh, p1);
  export_ply(import_ply(p1), p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  ASSERT_FALSE(b1.empty());
  EXPECT_EQ(b1, b2);
}

TEST(Ply, RejectsBadIndices) {
  const std::string path = tmp_path("sapg_bad.ply");
  {
    auto os = io::open_out(path);
    const std::string h =
        "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "element face 1\nproperty list uchar int vertex_indices\nend_header\n";
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    io::write_le<float>(os, 0.0f);
    io::write_le<float>(os, 0.0f);
    io::write_le<float>(os, 0.0f);
    io::write_le<uint8_t>(os, 3);
    io::write_le<int32_t>(os, 0);
    io::write_le<int32_t>(os, 5);  // out of range
    io::write_le<int32_t>(os, 0);
  }
  EXPECT_THROW(import_ply(path), std::runtime_error);
}
