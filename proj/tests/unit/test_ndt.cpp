#include <map>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "gtforge/error.hpp"
#include "gtforge/ndt/ndt.hpp"
#include "gtforge/sim/lidar.hpp"
#include "ndt_oracle.hpp"
#include "scene_support.hpp"
#include "test_support.hpp"

using namespace gtforge;
using namespace gtforge::testing;
using Eigen::Vector3d;

namespace {

const sim::Scene& room() {
  static const sim::Scene s = sim::build_scene("room_10x8x3");
  return s;
}

struct RoomMap {
  PointCloud cloud;
  NdtGrid grid;
};

const RoomMap& room_map() {
  static const RoomMap m = [] {
    // surface samples with the 2 cm spread of a lidar-built map; exact
    // planes give cells too thin to pull in a scan 20 cm away
    RoomMap r;
    r.cloud = sample_surfaces(room(), 0.05);
    std::mt19937_64 rng(30);
    std::normal_distribution<double> n(0.0, 0.02);
    for (auto& p : r.cloud.points) p += Vector3d(n(rng), n(rng), n(rng));
    r.grid = build_grid(r.cloud, NdtParams{}, centered_grid_origin(r.cloud, 1.0));
    return r;
  }();
  return m;
}

PointCloud room_scan(const Pose& sensor, std::uint64_t seed) {
  return voxel_downsample(sim::simulate_spinning_scan(room(), sensor, sim::sensor_preset("vlp16"), seed), 0.25);
}

}  // namespace

TEST_CASE("build_grid degenerate and planar cells") {
  NdtParams p;
  PointCloud same;
  for (int i = 0; i < 10; ++i) same.points.emplace_back(0.5, 0.5, 0.5);
  same.points.emplace_back(3.5, 0.5, 0.5);  // keeps the map non-empty after the drop
  const NdtGrid g = build_grid(same, p);
  const NdtCell* c = g.find(Vector3d(0.5, 0.5, 0.5));
  if (c != nullptr) {
    CHECK((c->mean - Vector3d(0.5, 0.5, 0.5)).norm() < 1e-15);
    CHECK(c->covariance.isApprox(c->covariance(0, 0) * Eigen::Matrix3d::Identity()));
  }

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const Vector3d normal = Vector3d(0.2, -0.3, 1.0).normalized();
  const Vector3d e1 = normal.unitOrthogonal(), e2 = normal.cross(e1);
  PointCloud patch;
  for (int i = 0; i < 50; ++i) {
    patch.points.push_back(Vector3d(0.5, 0.5, 0.5) + 0.3 * (u(rng) - 0.5) * e1 + 0.3 * (u(rng) - 0.5) * e2);
  }
  const NdtGrid pg = build_grid(patch, p);
  REQUIRE(pg.size() == 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(pg.cells().begin()->second.covariance);
  CHECK(std::abs(std::abs(es.eigenvectors().col(0).dot(normal)) - 1.0) < 1e-9);
  // flat patch: floored to 1e-3 of the largest
  CHECK(es.eigenvalues()(0) == doctest::Approx(1e-3 * es.eigenvalues()(2)));

  CHECK_THROWS_AS(build_grid(PointCloud{}, p), Error);
}

TEST_CASE("build_grid equals brute-force voxel statistics") {
  std::mt19937_64 rng(32);
  const PointCloud cloud = random_cloud(rng, 4000, 2.0);
  NdtParams p;
  p.cell_size = 0.8;
  const Vector3d origin(0.13, -0.07, 0.21);
  const NdtGrid g = build_grid(cloud, p, origin);

  std::map<std::tuple<long, long, long>, std::vector<Vector3d>> voxels;
  for (const auto& q : cloud.points) {
    const Vector3d k = ((q - origin) / p.cell_size).array().floor();
    voxels[{std::lround(k.x()), std::lround(k.y()), std::lround(k.z())}].push_back(q);
  }
  std::size_t kept = 0;
  for (const auto& [key, pts] : voxels) {
    const NdtCell* c = g.find(VoxelKey{std::get<0>(key), std::get<1>(key), std::get<2>(key)});
    if (pts.size() < static_cast<std::size_t>(p.min_points_per_cell)) {
      CHECK(c == nullptr);
      continue;
    }
    REQUIRE(c != nullptr);
    ++kept;
    Vector3d mean = Vector3d::Zero();
    for (const auto& q : pts) mean += q;
    mean /= double(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& q : pts) cov += (q - mean) * (q - mean).transpose();
    cov /= double(pts.size() - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    if (es.eigenvalues()(0) < 1e-3 * es.eigenvalues()(2)) {
      const Vector3d v = es.eigenvalues().cwiseMax(1e-3 * es.eigenvalues()(2));
      cov = es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
    }
    CHECK(c->count == pts.size());
    CHECK((c->mean - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c->covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(kept == g.size());
}

TEST_CASE("score_pose values") {
  const NdtInstance inst = random_ndt_instance(33);
  const auto& [key, cell] = *inst.grid.cells().begin();
  PointCloud one;
  one.points = {cell.mean};
  const NdtScoreConstants k = ndt_score_constants(inst.grid.cell_size(), NdtParams{}.outlier_ratio);
  const NdtScore s = score_pose(inst.grid, one, Pose::Identity(), NdtParams{}.outlier_ratio);
  CHECK(s.value == -k.d1);
  CHECK(s.points_in_cells == 1);
  CHECK(s.gradient.norm() == 0.0);

  const NdtScore out = score_pose(inst.grid, one, Pose::Translation(Vector3d(100, 0, 0)), NdtParams{}.outlier_ratio);
  CHECK(out.value == 0.0);
  CHECK(out.points_in_cells == 0);
}

TEST_CASE("score_pose derivatives match finite differences") {
  const double ratio = NdtParams{}.outlier_ratio;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const NdtInstance inst = random_ndt_instance(1000 + seed);
    const NdtScore s = score_pose(inst.grid, inst.scan, inst.pose, ratio);
    REQUIRE(s.points_in_cells > 0);
    CHECK(relative_error(s.gradient, fd_gradient(inst.grid, inst.scan, inst.pose, ratio)) < 1e-4);
    CHECK(relative_error(s.hessian, fd_hessian(inst.grid, inst.scan, inst.pose, ratio)) < 1e-2);
  }
}

TEST_CASE("score peaks at the generating pose") {
  const RoomMap& m = room_map();
  const Pose truth = pose_from_ypr(0.4, 0.0, 0.0, Vector3d(-1.0, 1.0, 1.2));
  const PointCloud scan = room_scan(truth, 34);
  const double best = score_pose(m.grid, scan, truth, NdtParams{}.outlier_ratio).value;
  std::mt19937_64 rng(35);
  for (int i = 0; i < 20; ++i) {
    Pose d = random_pose(rng, 1.0, 5.0 * kDeg);
    if (d.translation().norm() < 0.5) d = Pose(d.rotation(), d.translation().normalized() * 0.5);
    CHECK(best >= score_pose(m.grid, scan, truth * d, NdtParams{}.outlier_ratio).value);
  }
}

TEST_CASE("ndt_align") {
  const RoomMap& m = room_map();
  NdtParams p;

  SUBCASE("fixed point") {
    // a scan sampled from the map cloud itself
    PointCloud scan;
    for (std::size_t i = 0; i < m.cloud.size(); i += 7) scan.points.push_back(m.cloud.points[i]);
    const Pose truth = pose_from_ypr(0.3, 0.0, 0.0, Vector3d(0.5, -0.5, 1.0));
    const RegResult r = ndt_align(m.grid, transform_cloud(scan, truth.inverse()), truth, p);
    CHECK(pose_distance(r.pose, truth).translation < 1e-3);
  }

  SUBCASE("recovers a (0.2 m, 2 deg) offset in the room") {
    std::mt19937_64 rng(36);
    for (int trial = 0; trial < 20; ++trial) {
      const Pose truth =
          pose_from_ypr(0.5 * trial, 0.0, 0.0, Vector3d(-2.0 + trial % 5, 0.5 * (trial % 3) - 0.5, 1.1));
      const Vector3d axis = random_unit(rng);
      const Pose offset(Eigen::Quaterniond(Eigen::AngleAxisd(2.0 * kDeg, axis)), random_unit(rng) * 0.2);
      const RegResult r = ndt_align(m.grid, room_scan(truth, 40 + trial), truth * offset, p);
      const auto d = pose_distance(r.pose, truth);
      CAPTURE(trial);
      CHECK(d.translation < 0.03);
      CHECK(d.rotation < 0.3 * kDeg);
    }
  }

  SUBCASE("unmapped area") {
    const PointCloud scan = room_scan(Pose::Translation(Vector3d(0, 0, 1)), 37);
    try {
      ndt_align(m.grid, scan, Pose::Translation(Vector3d(500, 0, 0)), p);
      FAIL("expected no-overlap");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoOverlap);
    }
  }
}

TEST_CASE("track_sequence") {
  const RoomMap& m = room_map();
  const Pose truth = pose_from_ypr(-0.2, 0.0, 0.0, Vector3d(1.0, 0.0, 1.0), 0.0);
  const sim::SensorSpec spec = sim::sensor_preset("vlp16");

  SUBCASE("single scan at truth") {
    const std::vector<PointCloud> scans{sim::simulate_spinning_scan(room(), truth, spec, 38)};
    const Trajectory t = track_sequence(m.grid, scans, truth, NdtParams{});
    REQUIRE(t.size() == 1);
    CHECK(pose_distance(t[0], truth).translation < 0.01);
    CHECK(t[0].stamp() == scans[0].stamp);
  }

  SUBCASE("stationary scans stay within 5 cm per axis") {
    std::vector<PointCloud> scans;
    for (int i = 0; i < 20; ++i) scans.push_back(sim::simulate_spinning_scan(room(), truth.with_stamp(0.1 * i), spec, 200 + i));
    const Trajectory t = track_sequence(m.grid, scans, truth, NdtParams{});
    REQUIRE(t.size() == scans.size());
    Vector3d mean = Vector3d::Zero(), var = Vector3d::Zero();
    for (const auto& p : t) mean += p.translation();
    mean /= double(t.size());
    for (const auto& p : t) var += (p.translation() - mean).cwiseAbs2();
    const Vector3d sd = (var / double(t.size())).cwiseSqrt();
    CHECK(sd.maxCoeff() <= 0.05);
    CHECK(t.degraded_count() == 0);
  }

  SUBCASE("motion prior in another frame drives the prediction") {
    // 2 m/s with a turn: the prior only contributes increments, so any
    // constant frame offset is irrelevant
    const Pose G = pose_from_ypr(1.0, 0.0, 0.0, Vector3d(30, -4, 2));
    std::vector<PointCloud> scans;
    std::vector<Pose> truths, prior;
    for (int i = 0; i < 15; ++i) {
      const Pose p = (truth * pose_from_ypr(0.03 * i, 0.0, 0.0, Vector3d(0.2 * i, 0.0, 0.0))).with_stamp(0.1 * i);
      truths.push_back(p);
      prior.push_back((G * p).with_stamp(p.stamp()));
      scans.push_back(sim::simulate_spinning_scan(room(), p, spec, 300 + i));
    }
    const Trajectory odo(prior);
    const Trajectory t = track_sequence(m.grid, scans, truth, NdtParams{}, &odo);
    REQUIRE(t.size() == scans.size());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(pose_distance(t[i], truths[i]).translation < 0.03);
  }

  SUBCASE("lost on the first scan") {
    const std::vector<PointCloud> scans{sim::simulate_spinning_scan(room(), truth, spec, 39)};
    try {
      track_sequence(m.grid, scans, Pose::Translation(Vector3d(500, 0, 0)), NdtParams{});
      FAIL("expected localization lost");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LocalizationLost);
    }
  }
}

TEST_CASE("grid cache round-trips exactly") {
  const RoomMap& m = room_map();
  const auto dir = scratch_dir("grid");
  write_grid(dir / "g.bin", m.grid);
  const NdtGrid back = read_grid(dir / "g.bin");
  CHECK(back.cell_size() == m.grid.cell_size());
  CHECK(back.origin() == m.grid.origin());
  REQUIRE(back.size() == m.grid.size());
  for (const auto& [key, cell] : m.grid.cells()) {
    const NdtCell* c = back.find(key);
    REQUIRE(c != nullptr);
    CHECK(c->mean == cell.mean);
    CHECK(c->covariance == cell.covariance);
    CHECK(c->inv_covariance == cell.inv_covariance);
    CHECK(c->count == cell.count);
  }
  CHECK_THROWS_AS(read_grid(dir / "missing.bin"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ndt params validation") {
  NdtParams p;
  CHECK_NOTHROW(p.validate());
  p.cell_size = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = NdtParams{};
  p.outlier_ratio = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
}
