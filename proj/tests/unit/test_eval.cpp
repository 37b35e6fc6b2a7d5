#include <fstream>
#include <functional>

#include <doctest.h>

#include "gtforge/error.hpp"
#include "gtforge/eval/ape.hpp"
#include "ape_oracle.hpp"
#include "test_support.hpp"

using namespace gtforge;
using namespace gtforge::testing;
using Eigen::Vector3d;

namespace {

Trajectory shifted(const Trajectory& t, double dt) {
  std::vector<Pose> p;
  for (const auto& x : t) p.push_back(x.with_stamp(x.stamp() + dt));
  return Trajectory(p);
}

Trajectory offset(const Trajectory& t, const Vector3d& d) {
  std::vector<Pose> p;
  for (const auto& x : t) p.push_back(Pose(x.rotation(), x.translation() + d, x.stamp()));
  return Trajectory(p);
}

Trajectory moved(const Trajectory& t, const Pose& G) {
  std::vector<Pose> p;
  for (const auto& x : t) p.push_back((G * x).with_stamp(x.stamp()));
  return Trajectory(p);
}

// Perturbs positions with noise so alignment has something to do.
Trajectory noisy(const Trajectory& t, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<Pose> p;
  for (const auto& x : t) p.push_back(Pose(x.rotation(), x.translation() + Vector3d(n(rng), n(rng), n(rng)), x.stamp()));
  return Trajectory(p);
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL("expected error " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("associate_timestamps") {
  std::mt19937_64 rng(41);
  const Trajectory t = random_trajectory(rng, 30);

  const Association same = associate_timestamps(t, t, 0.02);
  REQUIRE(same.size() == t.size());
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i] == std::make_pair(i, i));

  const Association half = associate_timestamps(shifted(t, 0.01), t, 0.02);
  REQUIRE(half.size() == t.size());
  for (std::size_t i = 0; i < half.size(); ++i) CHECK(half[i] == std::make_pair(i, i));

  expect_code(ErrorCode::NoAssociation, [&] { associate_timestamps(shifted(t, 100.0), t, 0.02); });
  expect_code(ErrorCode::NoData, [&] { associate_timestamps(Trajectory{}, t, 0.02); });
}

TEST_CASE("associate_timestamps equals the exhaustive greedy oracle") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> jitter(-0.04, 0.04), gap(0.01, 0.12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Pose> a, b;
    double ta = 0.0, tb = 0.0;
    for (int i = 0; i < 40; ++i) {
      ta += gap(rng);
      tb += gap(rng);
      a.push_back(Pose().with_stamp(ta));
      b.push_back(Pose().with_stamp(tb + jitter(rng)));
    }
    std::sort(b.begin(), b.end(), [](const Pose& x, const Pose& y) { return x.stamp() < y.stamp(); });
    const Trajectory est(a), ref(b);
    const double max_dt = 0.03;
    const Association oracle = brute_force_association(est, ref, max_dt);
    if (oracle.empty()) continue;
    CHECK(associate_timestamps(est, ref, max_dt) == oracle);
  }
}

TEST_CASE("apply_reference_transform") {
  std::mt19937_64 rng(43);
  const Trajectory t = random_trajectory(rng, 20);
  const Trajectory same = apply_reference_transform(t, Pose::Identity());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(pose_distance(same[i], t[i]).translation < 1e-15);

  // pure translations seen through a pure rotation: X * P * X^-1 rotates the translation
  std::vector<Pose> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(Pose::Translation(Vector3d(i, 2.0 * i, 1.0)).with_stamp(i));
  const Pose X = Pose::Rotation(Eigen::AngleAxisd(M_PI / 2, Vector3d::UnitZ()));
  const Trajectory r = apply_reference_transform(Trajectory(pts), X);
  for (int i = 0; i < 5; ++i) {
    CHECK((r[i].translation() - Vector3d(-2.0 * i, i, 1.0)).norm() < 1e-12);
    CHECK(rotation_angle(r[i]) < 1e-12);
    CHECK(r[i].stamp() == i);
  }

  const Pose Y = random_pose(rng, 2.0, M_PI);
  const Trajectory back = apply_reference_transform(apply_reference_transform(t, Y), Y.inverse());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto d = pose_distance(back[i], t[i]);
    CHECK(d.translation < 1e-9);
    CHECK(d.rotation < 1e-9);
  }
}

TEST_CASE("umeyama_alignment") {
  std::mt19937_64 rng(44);
  std::vector<Vector3d> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_cloud(rng, 1, 5.0).points[0]);
  const Pose id = umeyama_alignment(pts, pts);
  CHECK(id.translation().norm() < 1e-12);
  CHECK(rotation_angle(id) < 1e-12);

  for (int trial = 0; trial < 100; ++trial) {
    const Pose G = random_pose(rng, 30.0, M_PI);
    std::vector<Vector3d> ref;
    for (const auto& p : pts) ref.push_back(G * p);
    const Pose S = umeyama_alignment(pts, ref);
    CHECK(pose_distance(S, G).translation < 1e-9);
    CHECK(pose_distance(S, G).rotation < 1e-9);
  }

  const std::vector<Vector3d> line = {Vector3d(0, 0, 0), Vector3d(1, 2, 3), Vector3d(2, 4, 6)};
  expect_code(ErrorCode::DegenerateAlignment, [&] { umeyama_alignment(line, line); });
  expect_code(ErrorCode::DegenerateAlignment,
              [&] { umeyama_alignment({pts[0], pts[1]}, {pts[0], pts[1]}); });
}

TEST_CASE("compute_ape basics") {
  std::mt19937_64 rng(45);
  const Trajectory t = random_trajectory(rng, 25);
  const ApeStats zero = compute_ape(t, t);
  CHECK(zero.mean == 0.0);
  CHECK(zero.std == 0.0);
  CHECK(zero.max == 0.0);

  // dyadic positions so that the offset is applied without rounding
  std::vector<Pose> grid;
  for (int i = 0; i < 25; ++i) grid.push_back(Pose(t[i].rotation(), Vector3d(0.125 * i, -0.5 * i, 0.25), t[i].stamp()));
  const Trajectory g(grid);
  const ApeStats one = compute_ape(offset(g, Vector3d(1.0, 0.0, 0.0)), g);
  CHECK(one.mean == 1.0);
  CHECK(one.std == 0.0);
  CHECK(one.rmse == 1.0);
  CHECK(one.median == 1.0);
  CHECK(one.per_pose.size() == t.size());

  const Vector3d d(0.375, -1.25, 0.5);
  const ApeStats c = compute_ape(offset(g, d), g);
  CHECK(c.mean == doctest::Approx(d.norm()).epsilon(1e-14));
  CHECK(c.std == 0.0);
  const ApeStats loose = compute_ape(offset(t, d), t);
  CHECK(loose.std < 1e-12);

  ApeOptions rot;
  rot.rotation = true;
  const ApeStats r = compute_ape(t, t, rot);
  REQUIRE(r.rotation_mean.has_value());
  CHECK(*r.rotation_mean < 1e-12);

  CHECK(alignment_from_string("umeyama") == Alignment::Umeyama);
  CHECK_THROWS_AS(alignment_from_string("sim3"), Error);
  expect_code(ErrorCode::NoAssociation, [&] { compute_ape(shifted(t, 50.0), t); });
}

TEST_CASE("compute_ape equals brute force on random trajectories") {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    const std::size_t n = 20 + static_cast<std::size_t>(trial);
    const Trajectory ref = random_trajectory(rng, n);
    const Trajectory est = shifted(noisy(moved(ref, random_pose(rng, 1.0, 0.2)), rng, 0.1), 0.004 * (trial % 5));
    ApeOptions opts;
    const ApeStats s = compute_ape(est, ref, opts);
    const BruteApe b = brute_force_ape(est, ref, opts.max_dt, false);
    REQUIRE(s.per_pose.size() == b.errors.size());
    for (std::size_t i = 0; i < b.errors.size(); ++i) CHECK(std::abs(s.per_pose[i].translation - b.errors[i]) <= 1e-12);
    CHECK(std::abs(s.mean - b.mean) <= 1e-12);
    CHECK(std::abs(s.std - b.std) <= 1e-12);
    CHECK(std::abs(s.rmse - b.rmse) <= 1e-12);
    CHECK(std::abs(s.median - b.median) <= 1e-12);
    CHECK(std::abs(s.max - b.max) <= 1e-12);

    opts.align = Alignment::Umeyama;
    const ApeStats a = compute_ape(est, ref, opts);
    const BruteApe ba = brute_force_ape(est, ref, opts.max_dt, true);
    CHECK(std::abs(a.mean - ba.mean) <= 1e-9);
    CHECK(std::abs(a.rmse - ba.rmse) <= 1e-9);
    CHECK(a.rmse <= s.rmse + 1e-12);  // alignment minimises the squared error
  }
}

TEST_CASE("compute_ape properties") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory ref = random_trajectory(rng, 30);
    const Trajectory est = noisy(moved(ref, random_pose(rng, 2.0, 0.5)), rng, 0.2);

    ApeOptions aligned;
    aligned.align = Alignment::Umeyama;
    const ApeStats a = compute_ape(est, ref, aligned);
    const ApeStats b = compute_ape(moved(est, random_pose(rng, 50.0, M_PI)), ref, aligned);
    CHECK(std::abs(a.mean - b.mean) < 1e-9);
    CHECK(std::abs(a.rmse - b.rmse) < 1e-9);

    const ApeStats fwd = compute_ape(est, ref), rev = compute_ape(ref, est);
    CHECK(std::abs(fwd.mean - rev.mean) < 1e-12);

    CHECK(fwd.rmse >= fwd.mean);
    CHECK(a.rmse >= a.mean);
    CHECK(fwd.rmse * fwd.rmse == doctest::Approx(fwd.mean * fwd.mean + fwd.std * fwd.std).epsilon(1e-12));
  }
}

TEST_CASE("stationary_deviation") {
  std::vector<Pose> still;
  for (int i = 0; i < 10; ++i) still.push_back(Pose::Translation(Vector3d(1, 2, 3)).with_stamp(i));
  const AxisDeviation z = stationary_deviation(Trajectory(still), 0.0, 9.0);
  CHECK(z.std == Vector3d::Zero());
  CHECK(z.overall == 0.0);

  const double h = 0.025;
  const Trajectory two({Pose::Translation(Vector3d(0, 0, 1)).with_stamp(0.0),
                        Pose::Translation(Vector3d(0, 0, 1 + 2 * h)).with_stamp(1.0)});
  const AxisDeviation d = stationary_deviation(two, 0.0, 1.0);
  CHECK(d.std.z() == doctest::Approx(h).epsilon(1e-12));
  CHECK(d.std.x() == 0.0);
  CHECK(d.overall == doctest::Approx(h).epsilon(1e-12));

  expect_code(ErrorCode::InsufficientData, [&] { stationary_deviation(two, 0.5, 2.0); });
}

TEST_CASE("ape report outputs") {
  std::mt19937_64 rng(48);
  const Trajectory t = random_trajectory(rng, 10);
  ApeOptions opts;
  opts.rotation = true;
  const ApeStats s = compute_ape(offset(t, Vector3d(0, 0.5, 0)), t, opts);
  const nlohmann::json j = to_json(s, opts);
  CHECK(j["mean"] == 0.5);
  CHECK(j["units"] == "m");
  CHECK(j["pairs"] == 10);

  const auto dir = scratch_dir("ape");
  write_ape_csv(dir / "ape.csv", s, true);
  std::ifstream in(dir / "ape.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,error_m,rotation_error_rad");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == 10);
  std::filesystem::remove_all(dir);
}
