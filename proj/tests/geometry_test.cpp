#include "sapg/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "sapg/rng.hpp"

using namespace sapg;

namespace {

Vec3 random_unit(Rng& rng) {
  // Uniform on the sphere via normalized Gaussians.
  for (;;) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

// Independent oracle: compose the transform as a dense 4x4 homogeneous
// matrix and invert it numerically.
Vec3 homogeneous_to_body(const Pose& pose, const Vec3& p_world) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = pose.rotation;
  m.block<3, 1>(0, 3) = pose.translation;
  const Eigen::Vector4d q = m.inverse() * Eigen::Vector4d(p_world.x(), p_world.y(),
                                                          p_world.z(), 1.0);
  return q.head<3>();
}

}  // namespace

TEST(CellToSonar, IdentityPose) {
  const Vec3 p(1, 2, 3);
  EXPECT_EQ(cell_to_sonar(Pose{}, p), p);
}

TEST(CellToSonar, PureTranslation) {
  Pose pose;
  pose.translation = Vec3(1, 0, 0);
  EXPECT_LT((cell_to_sonar(pose, Vec3(1, 0, 0)) - Vec3::Zero()).norm(), 1e-15);
}

TEST(CellToSonar, MatchesHomogeneousOracle) {
  const Pose pose = Pose::yaw_pitch(M_PI_2, 0.3, Vec3(2.0, -1.0, 4.0));
  ASSERT_TRUE(pose.valid(1e-12));
  const Vec3 p(0.7, -2.3, 1.9);
  EXPECT_LT((cell_to_sonar(pose, p) - homogeneous_to_body(pose, p)).norm(), 1e-12);

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Pose q = Pose::yaw_pitch(rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0),
                                   Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                        rng.uniform(-5, 5)));
    const Vec3 x(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    EXPECT_LT((cell_to_sonar(q, x) - homogeneous_to_body(q, x)).norm(), 1e-10);
  }
}

TEST(ProjectPolar, Axes) {
  const PolarCoord a = project_polar(Vec3(1, 0, 0));
  EXPECT_DOUBLE_EQ(a.range, 1.0);
  EXPECT_DOUBLE_EQ(a.azimuth, 0.0);
  EXPECT_DOUBLE_EQ(a.elevation, 0.0);

  const PolarCoord b = project_polar(Vec3(0, 1, 0));
  EXPECT_DOUBLE_EQ(b.range, 1.0);
  EXPECT_DOUBLE_EQ(b.azimuth, M_PI_2);
  EXPECT_DOUBLE_EQ(b.elevation, 0.0);
}

TEST(ProjectPolar, Diagonal) {
  const PolarCoord p = project_polar(Vec3(1, 1, 1));
  EXPECT_NEAR(p.range, std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(p.azimuth, M_PI_4, 1e-15);
  EXPECT_NEAR(p.elevation, std::atan2(1.0, std::sqrt(2.0)), 1e-15);
}

TEST(ProjectPolar, ZeroVectorThrows) {
  EXPECT_THROW(project_polar(Vec3::Zero()), std::domain_error);
}

TEST(ProjectPolar, RangeEqualsNorm) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    if (v.norm() == 0.0) continue;
    EXPECT_NEAR(project_polar(v).range, v.norm(), 1e-12);
  }
}

TEST(AxisAngles, UnitAxes) {
  const Vec3 gx = axis_angles(Vec3::UnitX());
  EXPECT_DOUBLE_EQ(gx[0], 0.0);
  EXPECT_DOUBLE_EQ(gx[1], M_PI_2);
  EXPECT_DOUBLE_EQ(gx[2], M_PI_2);

  const Vec3 gz = axis_angles(-Vec3::UnitZ());
  EXPECT_DOUBLE_EQ(gz[0], M_PI_2);
  EXPECT_DOUBLE_EQ(gz[1], M_PI_2);
  EXPECT_DOUBLE_EQ(gz[2], 0.0);
}

TEST(AxisAngles, Diagonal) {
  const Vec3 g = axis_angles(Vec3(1, 1, 1).normalized());
  const double expected = std::acos(1.0 / std::sqrt(3.0));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[i], expected, 1e-12);
}

TEST(AxisAngles, NonUnitThrows) {
  EXPECT_THROW(axis_angles(Vec3(1, 1, 1)), std::domain_error);
}

TEST(AxisAngles, NegationInvariantAndPythagorean) {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const Vec3 v = random_unit(rng);
    const Vec3 g1 = axis_angles(v);
    const Vec3 g2 = axis_angles(-v);
    EXPECT_LT((g1 - g2).norm(), 1e-12);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += std::cos(g1[k]) * std::cos(g1[k]);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(LogMap, Identity) {
  const TangentDelta d = log_map(Vec3::UnitZ());
  EXPECT_DOUBLE_EQ(d.u, 0.0);
  EXPECT_DOUBLE_EQ(d.v, 0.0);
}

TEST(LogMap, UnitXChart) {
  const TangentDelta d = log_map(Vec3::UnitX());
  EXPECT_NEAR(d.u, M_PI_2, 1e-12);
  EXPECT_NEAR(d.v, 0.0, 1e-12);
}

TEST(LogMap, AntipodeThrows) {
  EXPECT_THROW(log_map(-Vec3::UnitZ()), std::domain_error);
}

TEST(ExpMap, Identity) {
  EXPECT_LT((exp_map({0.0, 0.0}) - Vec3::UnitZ()).norm(), 1e-15);
}

TEST(ExpMap, UnitXChart) {
  EXPECT_LT((exp_map({M_PI_2, 0.0}) - Vec3::UnitX()).norm(), 1e-12);
}

TEST(ExpMap, OutOfChartThrows) {
  EXPECT_THROW(exp_map({3.0, 2.0}), std::domain_error);
}

TEST(Manifold, ExpLogRoundtrip) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = random_unit(rng);
    if (v.z() < -1.0 + 1e-9) continue;
    EXPECT_LT((exp_map(log_map(v)) - v).norm(), 1e-9);
  }
}

TEST(Manifold, LogExpRoundtrip) {
  Rng rng(19);
  for (int i = 0; i < 1000; ++i) {
    const double angle = rng.uniform(0.0, M_PI - 1e-6);
    const double dir = rng.uniform(0.0, 2.0 * M_PI);
    const TangentDelta d{angle * std::cos(dir), angle * std::sin(dir)};
    const TangentDelta back = log_map(exp_map(d));
    EXPECT_NEAR(back.u, d.u, 1e-9);
    EXPECT_NEAR(back.v, d.v, 1e-9);
  }
}
