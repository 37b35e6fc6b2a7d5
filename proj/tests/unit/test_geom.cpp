#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <doctest.h>

#include "gtforge/error.hpp"
#include "gtforge/eval/trajectory.hpp"
#include "gtforge/geom/filters.hpp"
#include "gtforge/geom/kdtree.hpp"
#include "gtforge/geom/pcd_io.hpp"
#include "gtforge/geom/point_cloud.hpp"
#include "gtforge/geom/pose.hpp"
#include "gtforge/geom/rigid_fit.hpp"
#include "test_support.hpp"

using namespace gtforge;
using namespace gtforge::testing;
using Eigen::Vector3d;

namespace {

bool poses_close(const Pose& a, const Pose& b, double tol) {
  const auto d = pose_distance(a, b);
  return d.translation < tol && d.rotation < tol;
}

Pose rz(double deg) { return Pose::Rotation(Eigen::AngleAxisd(deg * kDeg, Vector3d::UnitZ())); }

}  // namespace

TEST_CASE("compose") {
  std::mt19937_64 rng(1);
  const Pose T = random_pose(rng, 3.0, 2.0);
  CHECK(poses_close(Pose::Identity() * T, T, 1e-12));
  CHECK(poses_close(T * T.inverse(), Pose::Identity(), 1e-12));
  const Pose r = rz(90) * rz(90);
  CHECK(poses_close(r, rz(180), 1e-12));
  CHECK(r.translation().norm() == 0.0);
  CHECK(std::abs(r.rotation().norm() - 1.0) < 1e-15);
}

TEST_CASE("compose is associative") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng, 10, M_PI), b = random_pose(rng, 10, M_PI), c = random_pose(rng, 10, M_PI);
    CHECK(poses_close((a * b) * c, a * (b * c), 1e-9));
  }
}

TEST_CASE("retract and so3 log/exp") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vector3d w = random_unit(rng) * (3.0 * (i + 1) / 51.0);
    CHECK((so3_log(so3_exp(w)) - w).norm() < 1e-9);
  }
  Eigen::Matrix<double, 6, 1> d;
  d << 0, 0, M_PI / 2, 1, 2, 3;
  const Pose p = retract(Pose::Identity(), d);
  CHECK(poses_close(p, Pose(rz(90).rotation(), Vector3d(1, 2, 3)), 1e-12));
}

TEST_CASE("transform_cloud") {
  PointCloud c;
  c.points = {Vector3d(1, 0, 0)};
  c.stamp = 4.5;
  const PointCloud id = transform_cloud(c, Pose::Identity());
  CHECK(id.points[0] == c.points[0]);
  const PointCloud r = transform_cloud(c, rz(90));
  CHECK((r.points[0] - Vector3d(0, 1, 0)).norm() < 1e-15);
  CHECK(r.stamp == 4.5);

  std::mt19937_64 rng(4);
  const PointCloud cloud = random_cloud(rng, 100, 10.0);
  const Pose T = random_pose(rng, 20.0, M_PI);
  const PointCloud moved = transform_cloud(cloud, T);
  const PointCloud back = transform_cloud(moved, T.inverse());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK((back.points[i] - cloud.points[i]).norm() < 1e-9);
  }
  // rigid: pairwise distances kept
  for (std::size_t i = 0; i + 1 < cloud.size(); ++i) {
    const double d0 = (cloud.points[i] - cloud.points[i + 1]).norm();
    const double d1 = (moved.points[i] - moved.points[i + 1]).norm();
    CHECK(std::abs(d0 - d1) < 1e-9);
  }
}

TEST_CASE("voxel_downsample") {
  PointCloud cube;
  for (int i = 0; i < 8; ++i) cube.points.emplace_back(0.1 + 0.1 * (i & 1), 0.1 + 0.1 * ((i >> 1) & 1), 0.1 + 0.1 * (i >> 2));
  const PointCloud one = voxel_downsample(cube, 1.0);
  REQUIRE(one.size() == 1);
  CHECK((one.points[0] - Vector3d(0.15, 0.15, 0.15)).norm() < 1e-12);

  CHECK(voxel_downsample(PointCloud{}, 0.5).empty());
  CHECK_THROWS_AS(voxel_downsample(cube, 0.0), Error);
  CHECK_THROWS_AS(voxel_downsample(cube, -1.0), Error);

  // hash oracle
  std::mt19937_64 rng(5);
  const PointCloud cloud = random_cloud(rng, 5000, 3.0);
  std::set<std::tuple<long, long, long>> occupied;
  for (const auto& p : cloud.points) {
    occupied.emplace(std::lround(std::floor(p.x() / 0.5)), std::lround(std::floor(p.y() / 0.5)),
                     std::lround(std::floor(p.z() / 0.5)));
  }
  const PointCloud down = voxel_downsample(cloud, 0.5);
  CHECK(down.size() == occupied.size());
  CHECK(down.size() <= cloud.size());
}

TEST_CASE("voxel_downsample is idempotent when each voxel holds one point") {
  std::mt19937_64 rng(6);
  const PointCloud once = voxel_downsample(random_cloud(rng, 3000, 2.0), 0.3);
  const PointCloud twice = voxel_downsample(once, 0.3);
  REQUIRE(twice.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice.points[i] == once.points[i]);
}

TEST_CASE("knn_query") {
  PointCloud line;
  line.points = {Vector3d(0, 0, 0), Vector3d(1, 0, 0), Vector3d(3, 0, 0)};
  const KdTree t(line);
  const auto self = t.knn(line.points[1], 1);
  REQUIRE(self.size() == 1);
  CHECK(self[0].index == 1);
  CHECK(self[0].distance == 0.0);
  const auto two = t.knn(line.points[0], 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].index == 0);
  CHECK(two[1].index == 1);
  CHECK(t.knn(line.points[0], 10).size() == 3);

  CHECK_THROWS_AS(KdTree(PointCloud{}).knn(Vector3d::Zero(), 1), Error);
}

TEST_CASE("knn_query equals exhaustive search") {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1000u, 2000u}) {
    const PointCloud cloud = random_cloud(rng, n, 5.0);
    const KdTree tree(cloud);
    for (int q = 0; q < 50; ++q) {
      const Vector3d query = random_cloud(rng, 1, 6.0).points[0];
      const std::size_t k = 1 + static_cast<std::size_t>(q % 9);
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < cloud.size(); ++i) all.emplace_back((cloud.points[i] - query).squaredNorm(), i);
      std::sort(all.begin(), all.end());
      const auto got = tree.knn(query, k);
      REQUIRE(got.size() == k);
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(got[i].index == all[i].second);
        CHECK(got[i].distance == std::sqrt(all[i].first));
        if (i > 0) CHECK(got[i].distance >= got[i - 1].distance);
      }
    }
  }
}

TEST_CASE("remove_outliers") {
  std::mt19937_64 rng(8);
  PointCloud c = random_cloud(rng, 200, 0.5);
  c.points.emplace_back(10.0, 0.0, 0.0);
  const auto r = remove_outliers(c, 5, 1.0);
  CHECK(!r.skipped);
  CHECK(std::find(r.kept.begin(), r.kept.end(), c.size() - 1) == r.kept.end());
  CHECK(r.cloud.size() < c.size());

  // regular grid interior: every point has the same neighbourhood
  PointCloud grid;
  for (int i = 0; i < 10; ++i) grid.points.emplace_back(0.1 * i, 0.0, 0.0);
  PointCloud ring;
  for (int i = 0; i < 60; ++i) ring.points.emplace_back(std::cos(i * M_PI / 30), std::sin(i * M_PI / 30), 0.0);
  const auto same = remove_outliers(ring, 2, 1.0);
  CHECK(same.cloud.size() == ring.size());

  const auto empty = remove_outliers(PointCloud{}, 5, 1.0);
  CHECK(empty.cloud.empty());
  const auto small = remove_outliers(grid, 10, 1.0);
  CHECK(small.skipped);
  CHECK(small.cloud.size() == grid.size());
  CHECK_THROWS_AS(remove_outliers(grid, 0, 1.0), Error);
}

TEST_CASE("rigid fit recovers noise-free transforms") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose T = random_pose(rng, 50.0, M_PI);
    const PointCloud src = random_cloud(rng, 3 + trial % 20, 10.0);
    std::vector<Vector3d> dst;
    for (const auto& p : src.points) dst.push_back(T * p);
    const Pose fit = fit_rigid_transform(src.points, dst);
    CHECK(poses_close(fit, T, 1e-9));
    CHECK(fit.rotation_matrix().determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  std::vector<Vector3d> collinear = {Vector3d(0, 0, 0), Vector3d(1, 1, 1), Vector3d(2, 2, 2), Vector3d(5, 5, 5)};
  CHECK_THROWS_AS(fit_rigid_transform(collinear, collinear), Error);
  std::vector<Vector3d> two = {Vector3d(0, 0, 0), Vector3d(1, 0, 0)};
  CHECK_THROWS_AS(fit_rigid_transform(two, two), Error);
}

TEST_CASE("pcd round trip") {
  std::mt19937_64 rng(10);
  PointCloud c = random_cloud(rng, 500, 20.0);
  for (std::size_t i = 0; i < c.size(); ++i) c.intensity.push_back(static_cast<float>(i));
  c.stamp = 12.25;
  c.frame_id = "lidar";
  const auto dir = scratch_dir("pcd");
  for (auto enc : {PcdEncoding::Ascii, PcdEncoding::Binary}) {
    const auto path = dir / (enc == PcdEncoding::Ascii ? "a.pcd" : "b.pcd");
    write_pcd(path, c, enc);
    const PointCloud back = read_pcd(path);
    REQUIRE(back.size() == c.size());
    CHECK(back.stamp == c.stamp);
    CHECK(back.frame_id == "lidar");
    CHECK(back.has_intensity());
    for (std::size_t i = 0; i < c.size(); ++i) {
      // stored as float32
      CHECK((back.points[i] - c.points[i].cast<float>().cast<double>()).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(read_pcd(dir / "missing.pcd"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("tum round trip") {
  std::mt19937_64 rng(11);
  const Trajectory t = random_trajectory(rng, 40);
  const auto dir = scratch_dir("tum");
  write_tum(dir / "t.tum", t);
  const Trajectory back = read_tum(dir / "t.tum");
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].stamp() == doctest::Approx(t[i].stamp()).epsilon(1e-12));
    CHECK(poses_close(back[i], t[i], 1e-8));
  }
  CHECK_THROWS_AS(Trajectory({Pose().with_stamp(1.0), Pose().with_stamp(1.0)}), Error);
  std::filesystem::remove_all(dir);
}
