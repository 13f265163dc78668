#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace sapg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid body pose. `rotation` columns are the body axes expressed in world
// coordinates (body-to-world), `translation` is the body origin in world.
// Sonar body frame: x forward, y starboard, z up; azimuth positive toward +y.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  bool valid(double tol = 1e-9) const {
    const Mat3 rtr = rotation.transpose() * rotation;
    return (rtr - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }

  Vec3 to_world(const Vec3& p_body) const { return rotation * p_body + translation; }
  Vec3 to_body(const Vec3& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }

  Pose compose(const Pose& child) const {
    return Pose{rotation * child.rotation, rotation * child.translation + translation};
  }

  static Pose yaw_pitch(double yaw, double pitch, const Vec3& t) {
    Pose p;
    p.rotation = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                  Eigen::AngleAxisd(pitch, Vec3::UnitY()))
                     .toRotationMatrix();
    p.translation = t;
    return p;
  }
};

struct PolarCoord {
  double range = 0.0;      // meters
  double azimuth = 0.0;    // radians, positive toward +y
  double elevation = 0.0;  // radians, positive toward +z
};

// 2-vector in the tangent plane of S^2 at e_z, components in the (e_x, e_y)
// basis. Principal chart: |delta| <= pi.
struct TangentDelta {
  double u = 0.0;
  double v = 0.0;

  double norm() const { return std::hypot(u, v); }
};

// World point -> sonar frame.
inline Vec3 cell_to_sonar(const Pose& sonar_in_world, const Vec3& p_world) {
  return sonar_in_world.to_body(p_world);
}

inline PolarCoord project_polar(const Vec3& p_sonar) {
  const double range = p_sonar.norm();
  if (range == 0.0) throw std::domain_error("project_polar: zero vector");
  const double horiz = std::hypot(p_sonar.x(), p_sonar.y());
  return PolarCoord{range, std::atan2(p_sonar.y(), p_sonar.x()),
                    std::atan2(p_sonar.z(), horiz)};
}

namespace detail {
inline void require_unit(const Vec3& v, const char* who) {
  if (std::abs(v.norm() - 1.0) > 1e-6)
    throw std::domain_error(std::string(who) + ": input is not a unit vector");
}
}  // namespace detail

// Angles between a unit direction and each coordinate axis, folded into
// [0, pi/2] (the sign of the direction does not matter).
inline Vec3 axis_angles(const Vec3& r_hat) {
  detail::require_unit(r_hat, "axis_angles");
  Vec3 out;
  for (int i = 0; i < 3; ++i)
    out[i] = std::acos(std::min(1.0, std::abs(r_hat[i])));
  return out;
}

// Log map of S^2 at e_z. The tangent direction is the azimuthal direction of
// the horizontal part of n_hat; the magnitude is the geodesic angle to e_z.
inline TangentDelta log_map(const Vec3& n_hat) {
  detail::require_unit(n_hat, "log_map");
  const double s = std::hypot(n_hat.x(), n_hat.y());  // sin(angle)
  const double c = n_hat.z();                         // cos(angle)
  if (s < 1e-12) {
    if (c < 0.0) throw std::domain_error("log_map: antipodal input (-e_z)");
    return TangentDelta{0.0, 0.0};
  }
  const double angle = std::atan2(s, c);
  const double scale = angle / s;
  return TangentDelta{scale * n_hat.x(), scale * n_hat.y()};
}

inline Vec3 exp_map(const TangentDelta& delta) {
  const double angle = delta.norm();
  if (angle > M_PI) throw std::domain_error("exp_map: |delta| > pi");
  if (angle < 1e-12) return Vec3::UnitZ();
  const double k = std::sin(angle) / angle;
  return Vec3(k * delta.u, k * delta.v, std::cos(angle));
}

}  // namespace sapg
