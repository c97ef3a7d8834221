#include "screloc/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "screloc/errors.hpp"

namespace screloc {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing junk");
    if (!std::isfinite(v)) throw std::invalid_argument("not finite");
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": expected a number for " +
                     what + ", got '" + tok + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Distance along the ray to the box surface, or +inf for a miss.
/// A ray starting inside the box hits the interior of the exit face.
double ray_box(const double o[3], const double d[3], const Box& box) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = box.lo(axis);
    const double hi = box.hi(axis);
    if (d[axis] == 0.0) {
      if (o[axis] < lo || o[axis] > hi) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t1 = (lo - o[axis]) / d[axis];
    double t2 = (hi - o[axis]) / d[axis];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  if (t_enter > t_exit || t_exit <= 0.0) return std::numeric_limits<double>::infinity();
  return t_enter > 0.0 ? t_enter : t_exit;
}

}  // namespace

void LidarModel::validate() const {
  if (n_azimuth < 1) throw ConfigError("lidar: n_azimuth must be >= 1");
  if (n_channels < 1) throw ConfigError("lidar: n_channels must be >= 1");
  if (!(elevation_min < elevation_max))
    throw ConfigError("lidar: elevation_min must be < elevation_max");
  if (!(max_range > 0.0)) throw ConfigError("lidar: max_range must be > 0");
}

World parse_world(const std::string& text) {
  World world;
  bool have_bounds = false;
  bool have_ground = false;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;

    const std::string& kw = toks[0];
    if (kw == "bounds") {
      if (toks.size() != 5)
        throw ParseError("line " + std::to_string(line_no) +
                         ": bounds takes 4 numbers (xmin ymin xmax ymax)");
      if (have_bounds)
        throw ConfigError("line " + std::to_string(line_no) + ": duplicate bounds directive");
      world.bounds.xmin = parse_number(toks[1], line_no, "bounds xmin");
      world.bounds.ymin = parse_number(toks[2], line_no, "bounds ymin");
      world.bounds.xmax = parse_number(toks[3], line_no, "bounds xmax");
      world.bounds.ymax = parse_number(toks[4], line_no, "bounds ymax");
      if (!(world.bounds.xmin < world.bounds.xmax) || !(world.bounds.ymin < world.bounds.ymax))
        throw ConfigError("line " + std::to_string(line_no) + ": bounds must have positive area");
      have_bounds = true;
    } else if (kw == "ground") {
      if (toks.size() != 2)
        throw ParseError("line " + std::to_string(line_no) + ": ground takes 1 number (z)");
      if (have_ground)
        throw ConfigError("line " + std::to_string(line_no) + ": duplicate ground directive");
      world.ground_z = parse_number(toks[1], line_no, "ground z");
      have_ground = true;
    } else if (kw == "box") {
      if (toks.size() != 7)
        throw ParseError("line " + std::to_string(line_no) +
                         ": box takes 6 numbers (cx cy cz sx sy sz)");
      Box box;
      box.cx = parse_number(toks[1], line_no, "box cx");
      box.cy = parse_number(toks[2], line_no, "box cy");
      box.cz = parse_number(toks[3], line_no, "box cz");
      box.sx = parse_number(toks[4], line_no, "box sx");
      box.sy = parse_number(toks[5], line_no, "box sy");
      box.sz = parse_number(toks[6], line_no, "box sz");
      if (!(box.sx > 0.0 && box.sy > 0.0 && box.sz > 0.0))
        throw ConfigError("line " + std::to_string(line_no) + ": box extents must be positive");
      world.obstacles.push_back(box);
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown directive '" + kw + "'");
    }
  }

  if (!have_bounds) throw ConfigError("world has no bounds directive");
  return world;
}

World load_world_file(const std::string& path) { return parse_world(read_file(path)); }

PointCloud raycast_scan(const World& world, const LidarModel& model, const Pose2D& pose) {
  model.validate();
  const double o[3] = {pose.x, pose.y, world.ground_z + model.sensor_height};
  const double cos_yaw = std::cos(pose.yaw);
  const double sin_yaw = std::sin(pose.yaw);

  PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(model.n_azimuth) * model.n_channels);

  for (int ia = 0; ia < model.n_azimuth; ++ia) {
    const double az = pose.yaw + 2.0 * M_PI * ia / model.n_azimuth;
    const double cos_az = std::cos(az);
    const double sin_az = std::sin(az);
    for (int ic = 0; ic < model.n_channels; ++ic) {
      const double el =
          model.n_channels == 1
              ? 0.5 * (model.elevation_min + model.elevation_max)
              : model.elevation_min + (model.elevation_max - model.elevation_min) * ic /
                                          (model.n_channels - 1);
      const double cos_el = std::cos(el);
      const double d[3] = {cos_el * cos_az, cos_el * sin_az, std::sin(el)};

      double t = std::numeric_limits<double>::infinity();
      if (d[2] < 0.0) t = (world.ground_z - o[2]) / d[2];
      for (const Box& box : world.obstacles) t = std::min(t, ray_box(o, d, box));

      if (t <= model.max_range) {
        // world-frame hit relative to the sensor origin, then rotate by -yaw
        const double wx = t * d[0];
        const double wy = t * d[1];
        const double wz = t * d[2];
        cloud.push_back({cos_yaw * wx + sin_yaw * wy, -sin_yaw * wx + cos_yaw * wy, wz});
      }
    }
  }
  return cloud;
}

bool footprint_collides(const World& world, double x, double y, double radius) {
  const double r2 = radius * radius;
  for (const Box& box : world.obstacles) {
    const double px = std::clamp(x, box.lo(0), box.hi(0));
    const double py = std::clamp(y, box.lo(1), box.hi(1));
    const double dx = x - px;
    const double dy = y - py;
    if (dx * dx + dy * dy <= r2) return true;
  }
  return false;
}

std::vector<Pose2D> sample_positions(const World& world, double spacing, double footprint_radius) {
  if (!(spacing > 0.0)) throw ConfigError("sample spacing must be > 0");
  if (footprint_radius < 0.0) throw ConfigError("footprint radius must be >= 0");

  const Bounds& b = world.bounds;
  const int nx = static_cast<int>(std::floor((b.xmax - b.xmin) / spacing + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor((b.ymax - b.ymin) / spacing + 1e-9)) + 1;

  std::vector<Pose2D> poses;
  poses.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    const double y = b.ymin + iy * spacing;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = b.xmin + ix * spacing;
      if (!footprint_collides(world, x, y, footprint_radius)) poses.push_back({x, y, 0.0});
    }
  }
  return poses;
}

namespace {

/// Shared "N numbers per line" parser for scan and pose files.
std::vector<std::array<double, 3>> parse_rows(const std::string& text, const char* what) {
  std::vector<std::array<double, 3>> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 numbers (" + what + ")");
    rows.push_back({parse_number(toks[0], line_no, what),
                    parse_number(toks[1], line_no, what),
                    parse_number(toks[2], line_no, what)});
  }
  return rows;
}

}  // namespace

PointCloud parse_scan(const std::string& text) {
  PointCloud cloud;
  for (const auto& row : parse_rows(text, "x y z")) cloud.push_back({row[0], row[1], row[2]});
  return cloud;
}

PointCloud load_scan_file(const std::string& path) { return parse_scan(read_file(path)); }

std::vector<Pose2D> parse_poses(const std::string& text) {
  std::vector<Pose2D> poses;
  for (const auto& row : parse_rows(text, "x y yaw")) poses.push_back({row[0], row[1], row[2]});
  return poses;
}

std::vector<Pose2D> load_pose_file(const std::string& path) { return parse_poses(read_file(path)); }

void save_pose_file(const std::string& path, const std::vector<Pose2D>& poses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.precision(12);
  for (const Pose2D& p : poses) out << p.x << ' ' << p.y << ' ' << p.yaw << '\n';
  if (!out) throw ConfigError("short write: " + path);
}

void save_scan_file(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.precision(12);
  for (const Point3& p : cloud) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  if (!out) throw ConfigError("short write: " + path);
}

std::uint64_t content_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace screloc
