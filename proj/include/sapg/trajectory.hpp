#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sapg/geometry.hpp"

namespace sapg {

enum class TrajectoryKind { Square, Line };

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::Square;
  double length = 50.0;       // square edge length or line length, meters
  double altitude = 5.0;      // above z = 0
  double speed = 1.0;         // m/s
  double sample_rate = 2.0;   // poses per second
  int laps = 1;               // square only
  double lap_displacement = 0.0;  // lateral shift per lap (+y), meters
  double mount_pitch = 0.0;   // sonar mounting pitch, radians, positive = down

  void validate() const {
    if (!(length > 0.0) || !(speed > 0.0) || !(sample_rate > 0.0) || laps < 1)
      throw std::invalid_argument("TrajectoryConfig: lengths, rates and laps must be positive");
  }
};

struct TimedPose {
  double time = 0.0;
  Pose pose;  // vehicle body in world (level; heading along travel)
};

// Sonar mount: forward-looking, pitched down about the body y axis.
inline Pose sonar_mount(double mount_pitch) {
  return Pose::yaw_pitch(0.0, mount_pitch, Vec3::Zero());
}

inline std::vector<TimedPose> generate_trajectory(const TrajectoryConfig& cfg) {
  cfg.validate();
  std::vector<TimedPose> out;
  const double dt = 1.0 / cfg.sample_rate;

  if (cfg.kind == TrajectoryKind::Line) {
    const double duration = cfg.length / cfg.speed;
    for (int i = 0;; ++i) {
      const double t = i * dt;
      if (t > duration + 1e-9) break;
      const double s = std::min(cfg.speed * t, cfg.length);
      TimedPose tp;
      tp.time = t;
      tp.pose = Pose::yaw_pitch(0.0, 0.0,
                                Vec3(s - 0.5 * cfg.length, 0.0, cfg.altitude));
      out.push_back(tp);
    }
    return out;
  }

  // Square centered on the origin, counter-clockwise, starting at the
  // (-L/2, -L/2) corner heading +x. Each lap is shifted by lap_displacement
  // along +y.
  const double half = 0.5 * cfg.length;
  const double perimeter = 4.0 * cfg.length;
  const double duration = cfg.laps * perimeter / cfg.speed;
  const Vec3 corners[4] = {Vec3(-half, -half, 0), Vec3(half, -half, 0),
                           Vec3(half, half, 0), Vec3(-half, half, 0)};
  for (int i = 0;; ++i) {
    const double t = i * dt;
    if (t > duration + 1e-9) break;
    double s = cfg.speed * t;
    const int lap = std::min(cfg.laps - 1, static_cast<int>(s / perimeter));
    s -= lap * perimeter;
    s = std::min(s, perimeter - 1e-12);
    const int edge = static_cast<int>(s / cfg.length);
    const double u = s - edge * cfg.length;
    const Vec3 a = corners[edge];
    const Vec3 b = corners[(edge + 1) % 4];
    const Vec3 dir = (b - a).normalized();
    TimedPose tp;
    tp.time = t;
    tp.pose = Pose::yaw_pitch(std::atan2(dir.y(), dir.x()), 0.0,
                              a + u * dir + Vec3(0.0, lap * cfg.lap_displacement,
                                                 cfg.altitude));
    out.push_back(tp);
  }
  return out;
}

}  // namespace sapg
