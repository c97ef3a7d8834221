#include <cmath>
#include <cstdio>
#include <set>

#include "doctest.h"
#include "screloc/errors.hpp"
#include "screloc/world.hpp"
#include "test_util.hpp"

using namespace screloc;

TEST_CASE("world parsing accepts the documented directives") {
  const World w = parse_world(
      "# comment\n"
      "\n"
      "bounds -2 -3 4 5\n"
      "ground 0.5\n"
      "box 1 2 3 4 5 6   # trailing comment\n"
      "box -1 -2 0 1 1 2\n");
  CHECK(w.bounds.xmin == -2);
  CHECK(w.bounds.ymin == -3);
  CHECK(w.bounds.xmax == 4);
  CHECK(w.bounds.ymax == 5);
  CHECK(w.ground_z == 0.5);
  REQUIRE(w.obstacles.size() == 2);
  CHECK(w.obstacles[0].cx == 1);
  CHECK(w.obstacles[0].sz == 6);
  CHECK(w.obstacles[0].lo(0) == doctest::Approx(-1.0));
  CHECK(w.obstacles[0].hi(2) == doctest::Approx(6.0));
}

TEST_CASE("world parsing rejects malformed input with line numbers") {
  CHECK_THROWS_AS(parse_world("bounds 0 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_world("box 1 2 3\nbounds 0 0 1 1\n"), ParseError);
  CHECK_THROWS_AS(parse_world("bounds 0 0 1 1\nwibble 3\n"), ParseError);
  CHECK_THROWS_AS(parse_world("bounds 0 0 1 1\nbox 0 0 0 1 x 1\n"), ParseError);
  // missing or duplicate directives and bad geometry are config errors
  CHECK_THROWS_AS(parse_world("box 0 0 0 1 1 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_world("bounds 0 0 1 1\nbounds 0 0 2 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_world("bounds 1 0 0 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_world("bounds 0 0 1 1\nbox 0 0 0 0 1 1\n"), ConfigError);

  try {
    parse_world("bounds 0 0 1 1\nbox bad\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("lidar model validation") {
  LidarModel m;
  CHECK_NOTHROW(m.validate());
  m.n_channels = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = LidarModel{};
  m.elevation_min = 0.4;
  m.elevation_max = 0.2;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = LidarModel{};
  m.max_range = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("raycast hits a wall at the expected range") {
  // single wall 5 m in front (+x), tall enough for every beam
  const World w = parse_world("bounds -1 -1 1 1\nbox 6 0 5 2 20 10\n");
  LidarModel m;
  m.n_azimuth = 8;
  m.n_channels = 1;  // single channel fires at the midpoint: 0 elevation
  m.elevation_min = -0.1;
  m.elevation_max = 0.1;
  const PointCloud cloud = raycast_scan(w, m, Pose2D{0, 0, 0});

  // beams: +x hits the wall face at x=5; -x, +/-y fly off with no return
  bool found_front = false;
  for (const Point3& p : cloud) {
    if (std::abs(p.y) < 1e-9 && p.x > 0) {
      found_front = true;
      CHECK(p.x == doctest::Approx(5.0));
      CHECK(p.z == doctest::Approx(0.0));  // sensor height, sensor frame
    }
    CHECK(std::hypot(p.x, p.y) <= m.max_range + 1e-9);
  }
  CHECK(found_front);
}

TEST_CASE("raycast reports points in the sensor frame under yaw") {
  const World w = parse_world("bounds -1 -1 1 1\nbox 6 0 5 2 20 10\n");
  LidarModel m;
  m.n_azimuth = 16;
  m.n_channels = 1;
  m.elevation_min = -0.1;
  m.elevation_max = 0.1;

  // rotating the sensor must not move the wall in the sensor frame once the
  // ray directions coincide: with yaw = -2*pi/16 the ray index shifts by one
  const PointCloud a = raycast_scan(w, m, Pose2D{0, 0, 0});
  const PointCloud b = raycast_scan(w, m, Pose2D{0, 0, 2.0 * M_PI / 16});
  REQUIRE(a.size() == b.size());
  // the world-frame hit set is identical; sensor-frame points are rotated
  std::multiset<double> ax, bx;
  for (const Point3& p : a) ax.insert(std::round(std::hypot(p.x, p.y) * 1e6));
  for (const Point3& p : b) bx.insert(std::round(std::hypot(p.x, p.y) * 1e6));
  CHECK(ax == bx);
}

TEST_CASE("downward beams return ground points at the right radius") {
  const World w = parse_world("bounds -1 -1 1 1\n");
  LidarModel m;
  m.n_azimuth = 4;
  m.n_channels = 1;
  m.elevation_min = -M_PI / 4 - 0.1;  // midpoint: 45 degrees down
  m.elevation_max = -M_PI / 4 + 0.1;
  m.sensor_height = 1.0;
  const PointCloud cloud = raycast_scan(w, m, Pose2D{0, 0, 0});
  REQUIRE(cloud.size() == 4);  // every beam hits the ground
  for (const Point3& p : cloud) {
    CHECK(std::hypot(p.x, p.y) == doctest::Approx(1.0));  // 45 deg from 1 m up
    CHECK(p.z == doctest::Approx(-1.0));                  // ground in sensor frame
  }
}

TEST_CASE("raycast from inside an obstacle still reports the exit face") {
  const World w = parse_world("bounds -5 -5 5 5\nbox 0 0 5 2 2 10\n");
  LidarModel m;
  m.n_azimuth = 4;
  m.n_channels = 1;
  m.elevation_min = -0.1;
  m.elevation_max = 0.1;
  const PointCloud cloud = raycast_scan(w, m, Pose2D{0, 0, 0});
  REQUIRE(cloud.size() == 4);
  for (const Point3& p : cloud) CHECK(std::hypot(p.x, p.y) == doctest::Approx(1.0));
}

TEST_CASE("footprint collision uses distance to the box footprint") {
  const World w = parse_world("bounds -5 -5 5 5\nbox 0 0 1 2 2 2\n");  // footprint [-1,1]^2
  CHECK(footprint_collides(w, 0, 0, 0.1));
  CHECK(footprint_collides(w, 1.2, 0, 0.3));
  CHECK_FALSE(footprint_collides(w, 1.4, 0, 0.3));
  // corner: diagonal distance counts
  CHECK_FALSE(footprint_collides(w, 1.25, 1.25, 0.3));
  CHECK(footprint_collides(w, 1.2, 1.2, 0.3));
}

TEST_CASE("pose sampling covers the grid and excludes collisions") {
  const World toy = load_world_file(testutil::data_path("toy.world"));
  const auto poses = sample_positions(toy, 1.0, 0.3);
  CHECK(poses.size() == 9);  // 3 x 3, crate is outside the bounds
  for (const Pose2D& p : poses) CHECK(p.yaw == 0.0);

  // brute-force count oracle at a finer spacing
  const double spacing = 0.5;
  std::size_t expect = 0;
  for (int iy = 0; iy <= 4; ++iy)
    for (int ix = 0; ix <= 4; ++ix) {
      const double x = -1 + ix * spacing, y = -1 + iy * spacing;
      if (!footprint_collides(toy, x, y, 0.3)) ++expect;
    }
  CHECK(sample_positions(toy, spacing, 0.3).size() == expect);

  // a centered obstacle knocks out the middle pose
  const World blocked = parse_world("bounds -1 -1 1 1\nbox 0 0 0.5 0.4 0.4 1\n");
  CHECK(sample_positions(blocked, 1.0, 0.3).size() == 8);
}

TEST_CASE("scan and pose file round trips") {
  const PointCloud cloud{{1.25, -2.5, 0.75}, {0, 0, 0}, {-3.5, 4.25, -0.5}};
  save_scan_file("/tmp/screloc_test_scan.txt", cloud);
  const PointCloud back = load_scan_file("/tmp/screloc_test_scan.txt");
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back[i].x == doctest::Approx(cloud[i].x).epsilon(1e-12));
    CHECK(back[i].y == doctest::Approx(cloud[i].y).epsilon(1e-12));
    CHECK(back[i].z == doctest::Approx(cloud[i].z).epsilon(1e-12));
  }

  const std::vector<Pose2D> poses{{0.5, -0.25, 1.5}, {-2, 3, -3.0}};
  save_pose_file("/tmp/screloc_test_poses.txt", poses);
  const auto poses_back = load_pose_file("/tmp/screloc_test_poses.txt");
  REQUIRE(poses_back.size() == poses.size());
  CHECK(poses_back[1].yaw == doctest::Approx(-3.0).epsilon(1e-12));

  std::remove("/tmp/screloc_test_scan.txt");
  std::remove("/tmp/screloc_test_poses.txt");
}

TEST_CASE("malformed scan lines name the line number") {
  try {
    parse_scan("0 0 0\n1 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_poses("1 2 3 4\n"), ParseError);
  CHECK_THROWS_AS(parse_scan("a b c\n"), ParseError);
}

TEST_CASE("content hash is stable and content-sensitive") {
  const std::uint64_t h = content_hash("bounds 0 0 1 1\n");
  CHECK(h == content_hash("bounds 0 0 1 1\n"));
  CHECK(h != content_hash("bounds 0 0 1 2\n"));
  CHECK(content_hash("") != 0);  // FNV offset basis
}
