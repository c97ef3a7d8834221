#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "screloc/geometry.hpp"

namespace screloc {

/// Axis-aligned obstacle box given by center and full extents, meters.
struct Box {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double sx = 0.0, sy = 0.0, sz = 0.0;

  double lo(int axis) const {
    return axis == 0 ? cx - 0.5 * sx : axis == 1 ? cy - 0.5 * sy : cz - 0.5 * sz;
  }
  double hi(int axis) const {
    return axis == 0 ? cx + 0.5 * sx : axis == 1 ? cy + 0.5 * sy : cz + 0.5 * sz;
  }
};

/// XY rectangle bounding the samplable region.
struct Bounds {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
};

/// Synthetic environment: an infinite ground plane plus axis-aligned boxes.
struct World {
  double ground_z = 0.0;
  std::vector<Box> obstacles;
  Bounds bounds{};
};

/// Spinning multi-line range sensor. Azimuths are uniformly spaced over the
/// full circle starting at the pose heading; elevations are uniformly spaced
/// over [elevation_min, elevation_max] (a single channel uses the midpoint).
struct LidarModel {
  int n_azimuth = 360;
  int n_channels = 16;
  double elevation_min = -15.0 * M_PI / 180.0;  // radians
  double elevation_max = 15.0 * M_PI / 180.0;
  double max_range = 80.0;
  double sensor_height = 0.5;  // above ground

  void validate() const;  // throws ConfigError
};

/// Parses the world text format:
///   # comment
///   bounds xmin ymin xmax ymax     (required, exactly once)
///   ground z                       (optional, defaults to 0)
///   box cx cy cz sx sy sz          (any number)
/// Throws ParseError naming the line for malformed lines, ConfigError for
/// missing/duplicate directives or non-positive box extents.
World parse_world(const std::string& text);
World load_world_file(const std::string& path);

/// Simulates one scan at the given pose. Rays start at
/// (pose.x, pose.y, ground_z + sensor_height), the azimuth grid is rotated by
/// pose.yaw, and each ray reports the nearest ground/box hit within max_range.
/// Points are returned in the sensor frame; rays without a hit contribute
/// nothing. Deterministic.
PointCloud raycast_scan(const World& world, const LidarModel& model, const Pose2D& pose);

/// True when a disc of the given radius centered at (x, y) touches any
/// obstacle footprint.
bool footprint_collides(const World& world, double x, double y, double radius);

/// Grid of collision-free poses covering the bounds at the given spacing,
/// yaw = 0, both boundary rows included.
std::vector<Pose2D> sample_positions(const World& world, double spacing, double footprint_radius);

// Text I/O helpers. Scan files hold "x y z" per line, pose files "x y yaw";
// blank lines and '#' comments are skipped. Malformed lines raise ParseError
// with the line number.
PointCloud parse_scan(const std::string& text);
PointCloud load_scan_file(const std::string& path);
std::vector<Pose2D> parse_poses(const std::string& text);
std::vector<Pose2D> load_pose_file(const std::string& path);
void save_pose_file(const std::string& path, const std::vector<Pose2D>& poses);
void save_scan_file(const std::string& path, const PointCloud& cloud);

/// FNV-1a content hash, used to stamp libraries with their source world.
std::uint64_t content_hash(const std::string& text);

}  // namespace screloc
