#pragma once

#include <cmath>
#include <vector>

namespace screloc {

/// 3D point in meters; the frame (sensor or map) depends on context.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

using PointCloud = std::vector<Point3>;

/// Planar pose in the map frame, yaw in radians.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Wraps an angle into [-pi, pi).
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * M_PI);  // [-pi, pi]
  if (r >= M_PI) r -= 2.0 * M_PI;
  return r;
}

/// Rotates p about the z axis by angle.
inline Point3 rotate_z(const Point3& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

}  // namespace screloc
