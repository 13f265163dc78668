#include "sapg/scene.hpp"

#include <gtest/gtest.h>

#include "sapg/rng.hpp"

using namespace sapg;

namespace {

Scene bump_scene() {
  return Scene::analytic(0.0, {GaussianBump{Vec2(0, 0), 1.5, 3.0}}, {},
                         Vec2(-15, -15), Vec2(15, 15));
}

// Dense sampling of the surface; nearest sample distance upper-bounds the
// true distance (within the sampling pitch).
std::vector<Vec3> sample_surface(const Scene& scene, double pitch) {
  std::vector<Vec3> pts;
  for (double x = scene.extent_min().x(); x <= scene.extent_max().x(); x += pitch)
    for (double y = scene.extent_min().y(); y <= scene.extent_max().y(); y += pitch)
      pts.emplace_back(x, y, scene.height(x, y));
  return pts;
}

}  // namespace

TEST(Scene, FlatFloorDistance) {
  const Scene scene = Scene::analytic(0.0, {}, {}, Vec2(-10, -10), Vec2(10, 10));
  EXPECT_NEAR(scene.signed_distance(Vec3(0, 0, 2)), 2.0, 1e-12);
  EXPECT_NEAR(scene.signed_distance(Vec3(3, -4, -1)), -1.0, 1e-12);
}

TEST(Scene, BumpDistanceMatchesDenseSampling) {
  const Scene scene = bump_scene();
  const auto surface = sample_surface(scene, 0.05);
  Rng rng(23);
  for (int i = 0; i < 60; ++i) {
    const Vec3 p(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-2, 5));
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& s : surface) nearest = std::min(nearest, (p - s).norm());
    const double d = std::abs(scene.signed_distance(p));
    // |sdf| can underestimate (it is a bound) but must stay within 1.5x.
    EXPECT_LE(d, nearest + 0.1);
    EXPECT_GE(1.5 * d + 0.1, nearest);
  }
}

TEST(Scene, SignedDistanceIsLipschitz) {
  // The heightfield term divides by the local slope factor, so on curved
  // ground the field is 1-Lipschitz only up to a curvature term; 5% covers
  // the bump scene comfortably.
  const Scene scene = bump_scene();
  Rng rng(29);
  for (int i = 0; i < 500; ++i) {
    const Vec3 a(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-3, 6));
    const Vec3 b = a + 0.3 * Vec3(rng.normal(), rng.normal(), rng.normal());
    const double da = scene.signed_distance(a);
    const double db = scene.signed_distance(b);
    EXPECT_LE(std::abs(da - db), 1.05 * (a - b).norm() + 1e-9);
  }
}

TEST(Scene, BoxDistance) {
  const SceneBox box{Vec3(0, 0, 1), Vec3(2, 2, 2)};
  const Scene scene = Scene::analytic(-10.0, {}, {box}, Vec2(-5, -5), Vec2(5, 5));
  EXPECT_NEAR(scene.signed_distance(Vec3(0, 0, 3)), 1.0, 1e-12);   // above the top
  EXPECT_NEAR(scene.signed_distance(Vec3(2.5, 0, 1)), 1.5, 1e-12); // beside
  EXPECT_NEAR(scene.signed_distance(Vec3(0, 0, 1)), -1.0, 1e-12);  // center
}

TEST(Scene, HeightfieldBilinear) {
  const Scene scene = Scene::from_heightfield(
      Vec2(0, 0), 1.0, {{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}}, {});
  EXPECT_NEAR(scene.height(1.0, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(scene.height(0.5, 1.0), 0.5, 1e-12);
  EXPECT_NEAR(scene.height(1.0, 0.5), 0.5, 1e-12);
  EXPECT_NEAR(scene.height(0.0, 0.0), 0.0, 1e-12);
  // Clamped beyond the grid.
  EXPECT_NEAR(scene.height(-3.0, -3.0), 0.0, 1e-12);
}

TEST(Scene, JsonRoundTrip) {
  nlohmann::json j;
  j["base_height"] = 0.0;
  j["bumps"] = {{{"center", {0.0, 0.0}}, {"height", 1.5}, {"sigma", 3.0}}};
  j["boxes"] = {{{"center", {5.0, 0.0, 1.4}}, {"size", {1.6, 1.6, 2.8}}}};
  j["extent"] = {{-14.0, -14.0}, {14.0, 14.0}};
  const Scene scene = Scene::from_json(j);
  EXPECT_NEAR(scene.height(0, 0), 1.5, 1e-12);
  EXPECT_EQ(scene.boxes().size(), 1u);
  EXPECT_LT(scene.signed_distance(Vec3(5, 0, 1.4)), 0.0);
}

TEST(Scene, RejectsBadHeightfield) {
  EXPECT_THROW(Scene::from_heightfield(Vec2(0, 0), 1.0, {{1.0}}, {}),
               std::invalid_argument);
  EXPECT_THROW(Scene::from_heightfield(
                   Vec2(0, 0), 1.0,
                   {{0.0, 0.0}, {0.0, std::numeric_limits<double>::infinity()}}, {}),
               std::invalid_argument);
}
